// Minimal WebGL2 point-cloud viewer with an orbit camera and line-box
// overlays for undecided clusters. Render-only; selection and decisions
// never depend on what happens here.

const POINT_VS = `#version 300 es
layout(location=0) in vec3 aPos;
layout(location=1) in vec3 aColor;
uniform mat4 uMvp;
uniform float uSize;
out vec3 vColor;
void main() {
    gl_Position = uMvp * vec4(aPos, 1.0);
    gl_PointSize = uSize;
    vColor = aColor;
}`;

const POINT_FS = `#version 300 es
precision mediump float;
in vec3 vColor;
out vec4 outColor;
void main() { outColor = vec4(vColor, 1.0); }`;

type Mat4 = Float32Array;

function mat4Mul(a: Mat4, b: Mat4): Mat4 {
    const out = new Float32Array(16);
    for (let c = 0; c < 4; c++) {
        for (let r = 0; r < 4; r++) {
            out[c * 4 + r] = a[r] * b[c * 4] + a[4 + r] * b[c * 4 + 1]
                + a[8 + r] * b[c * 4 + 2] + a[12 + r] * b[c * 4 + 3];
        }
    }
    return out;
}

function perspective(fovY: number, aspect: number, near: number, far: number): Mat4 {
    const f = 1 / Math.tan(fovY / 2);
    const out = new Float32Array(16);
    out[0] = f / aspect;
    out[5] = f;
    out[10] = (far + near) / (near - far);
    out[11] = -1;
    out[14] = (2 * far * near) / (near - far);
    return out;
}

function lookAt(eye: number[], target: number[], up: number[]): Mat4 {
    const sub = (a: number[], b: number[]) => [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    const norm = (v: number[]) => {
        const l = Math.hypot(v[0], v[1], v[2]) || 1;
        return [v[0] / l, v[1] / l, v[2] / l];
    };
    const cross = (a: number[], b: number[]) => [
        a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    const dot = (a: number[], b: number[]) => a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    const z = norm(sub(eye, target));
    const x = norm(cross(up, z));
    const y = cross(z, x);
    return new Float32Array([
        x[0], y[0], z[0], 0,
        x[1], y[1], z[1], 0,
        x[2], y[2], z[2], 0,
        -dot(x, eye), -dot(y, eye), -dot(z, eye), 1,
    ]);
}

export interface BoxSpec {
    min: number[];
    max: number[];
    color: [number, number, number];
}

export class PointViewer {
    private gl: WebGL2RenderingContext;
    private program: WebGLProgram;
    private pointVao: WebGLVertexArrayObject | null = null;
    private pointCount = 0;
    private boxVao: WebGLVertexArrayObject | null = null;
    private boxVertexCount = 0;

    // orbit camera
    private target = [0, 0, 0];
    private distance = 100;
    private yaw = 0.8;
    private pitch = 0.5;

    constructor(private canvas: HTMLCanvasElement) {
        const gl = canvas.getContext("webgl2");
        if (!gl) throw new Error("WebGL2 is not available in this browser");
        this.gl = gl;
        this.program = this.compile(POINT_VS, POINT_FS);
        this.bindInput();
    }

    private compile(vsSource: string, fsSource: string): WebGLProgram {
        const gl = this.gl;
        const make = (type: number, src: string) => {
            const shader = gl.createShader(type)!;
            gl.shaderSource(shader, src);
            gl.compileShader(shader);
            if (!gl.getShaderParameter(shader, gl.COMPILE_STATUS)) {
                throw new Error(gl.getShaderInfoLog(shader) ?? "shader error");
            }
            return shader;
        };
        const program = gl.createProgram()!;
        gl.attachShader(program, make(gl.VERTEX_SHADER, vsSource));
        gl.attachShader(program, make(gl.FRAGMENT_SHADER, fsSource));
        gl.linkProgram(program);
        if (!gl.getProgramParameter(program, gl.LINK_STATUS)) {
            throw new Error(gl.getProgramInfoLog(program) ?? "link error");
        }
        return program;
    }

    private makeVao(positions: Float32Array, colors: Float32Array): WebGLVertexArrayObject {
        const gl = this.gl;
        const vao = gl.createVertexArray()!;
        gl.bindVertexArray(vao);
        for (const [location, data] of [[0, positions], [1, colors]] as const) {
            const buf = gl.createBuffer();
            gl.bindBuffer(gl.ARRAY_BUFFER, buf);
            gl.bufferData(gl.ARRAY_BUFFER, data, gl.STATIC_DRAW);
            gl.enableVertexAttribArray(location);
            gl.vertexAttribPointer(location, 3, gl.FLOAT, false, 0, 0);
        }
        gl.bindVertexArray(null);
        return vao;
    }

    setPoints(positions: Float32Array, colors: Float32Array): void {
        this.pointVao = this.makeVao(positions, colors);
        this.pointCount = positions.length / 3;
        this.fit(positions);
        this.render();
    }

    setColors(colors: Float32Array, positions: Float32Array): void {
        // cheap path: rebuild the VAO; buffers are small enough at budget
        this.pointVao = this.makeVao(positions, colors);
        this.render();
    }

    setBoxes(boxes: BoxSpec[]): void {
        const edges = [
            [0, 1], [1, 3], [3, 2], [2, 0],
            [4, 5], [5, 7], [7, 6], [6, 4],
            [0, 4], [1, 5], [2, 6], [3, 7],
        ];
        const positions: number[] = [];
        const colors: number[] = [];
        for (const box of boxes) {
            const corners: number[][] = [];
            for (let i = 0; i < 8; i++) {
                corners.push([
                    (i & 1) ? box.max[0] : box.min[0],
                    (i & 2) ? box.max[1] : box.min[1],
                    (i & 4) ? box.max[2] : box.min[2],
                ]);
            }
            for (const [a, b] of edges) {
                positions.push(...corners[a], ...corners[b]);
                colors.push(...box.color, ...box.color);
            }
        }
        this.boxVao = positions.length
            ? this.makeVao(new Float32Array(positions), new Float32Array(colors))
            : null;
        this.boxVertexCount = positions.length / 3;
        this.render();
    }

    private fit(positions: Float32Array): void {
        if (!positions.length) return;
        let span = 1;
        for (let axis = 0; axis < 3; axis++) {
            let lo = Infinity, hi = -Infinity;
            for (let i = axis; i < positions.length; i += 3) {
                const v = positions[i];
                if (v < lo) lo = v;
                if (v > hi) hi = v;
            }
            this.target[axis] = (lo + hi) / 2;
            span = Math.max(span, hi - lo);
        }
        this.distance = span * 1.4;
    }

    private bindInput(): void {
        let dragging = false;
        let panning = false;
        let lastX = 0, lastY = 0;
        this.canvas.addEventListener("mousedown", (e) => {
            dragging = true;
            panning = e.button === 2 || e.shiftKey;
            lastX = e.clientX;
            lastY = e.clientY;
        });
        window.addEventListener("mouseup", () => { dragging = false; });
        window.addEventListener("mousemove", (e) => {
            if (!dragging) return;
            const dx = e.clientX - lastX;
            const dy = e.clientY - lastY;
            lastX = e.clientX;
            lastY = e.clientY;
            if (panning) {
                const scale = this.distance * 0.0015;
                this.target[0] -= dx * scale * Math.cos(this.yaw);
                this.target[1] += dx * scale * Math.sin(this.yaw);
                this.target[2] += dy * scale;
            } else {
                this.yaw += dx * 0.008;
                this.pitch = Math.min(1.5, Math.max(-1.5, this.pitch + dy * 0.008));
            }
            this.render();
        });
        this.canvas.addEventListener("wheel", (e) => {
            e.preventDefault();
            this.distance *= Math.exp(e.deltaY * 0.001);
            this.render();
        }, { passive: false });
        this.canvas.addEventListener("contextmenu", (e) => e.preventDefault());
    }

    render(): void {
        const gl = this.gl;
        const w = this.canvas.clientWidth || this.canvas.width;
        const h = this.canvas.clientHeight || this.canvas.height;
        if (this.canvas.width !== w || this.canvas.height !== h) {
            this.canvas.width = w;
            this.canvas.height = h;
        }
        gl.viewport(0, 0, w, h);
        gl.clearColor(0.08, 0.09, 0.11, 1);
        gl.enable(gl.DEPTH_TEST);
        gl.clear(gl.COLOR_BUFFER_BIT | gl.DEPTH_BUFFER_BIT);

        const eye = [
            this.target[0] + this.distance * Math.cos(this.pitch) * Math.cos(this.yaw),
            this.target[1] + this.distance * Math.cos(this.pitch) * Math.sin(this.yaw),
            this.target[2] + this.distance * Math.sin(this.pitch),
        ];
        const mvp = mat4Mul(
            perspective(Math.PI / 4, w / Math.max(h, 1), 0.1, this.distance * 20),
            lookAt(eye, this.target, [0, 0, 1]));

        gl.useProgram(this.program);
        gl.uniformMatrix4fv(gl.getUniformLocation(this.program, "uMvp"), false, mvp);
        if (this.pointVao) {
            gl.uniform1f(gl.getUniformLocation(this.program, "uSize"), 2.0);
            gl.bindVertexArray(this.pointVao);
            gl.drawArrays(gl.POINTS, 0, this.pointCount);
        }
        if (this.boxVao) {
            gl.bindVertexArray(this.boxVao);
            gl.drawArrays(gl.LINES, 0, this.boxVertexCount);
        }
        gl.bindVertexArray(null);
    }
}
