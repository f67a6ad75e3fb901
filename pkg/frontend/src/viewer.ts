import * as THREE from "three";

/**
 * Minimal mesh viewer: fixed topology, vertex-buffer replacement on update,
 * pointer-drag orbit and wheel zoom.
 */
export class MeshViewer {
  private renderer: THREE.WebGLRenderer;
  private scene = new THREE.Scene();
  private camera: THREE.PerspectiveCamera;
  private mesh: THREE.Mesh | null = null;
  private geometry: THREE.BufferGeometry | null = null;
  private target = new THREE.Vector3();
  private distance = 400;
  private theta = 0.6;
  private phi = 1.2;

  constructor(private readonly container: HTMLElement) {
    this.renderer = new THREE.WebGLRenderer({ antialias: true });
    this.renderer.setClearColor(0x10141a);
    this.camera = new THREE.PerspectiveCamera(45, 1, 1, 5000);
    container.appendChild(this.renderer.domElement);
    this.scene.add(new THREE.AmbientLight(0xffffff, 0.45));
    const key = new THREE.DirectionalLight(0xffffff, 1.0);
    key.position.set(1, 1, 2);
    this.scene.add(key);
    const fill = new THREE.DirectionalLight(0x8899ff, 0.4);
    fill.position.set(-2, -1, -1);
    this.scene.add(fill);
    this.bindControls();
    this.resize();
    window.addEventListener("resize", () => this.resize());
    this.animate();
  }

  /** Replace vertex positions; rebuild geometry only when topology changes. */
  update(vertices: number[], faces: number[]): void {
    const positions = new Float32Array(vertices);
    if (
      this.geometry &&
      this.geometry.getAttribute("position").count === positions.length / 3
    ) {
      const attr = this.geometry.getAttribute("position") as THREE.BufferAttribute;
      (attr.array as Float32Array).set(positions);
      attr.needsUpdate = true;
      this.geometry.computeVertexNormals();
      return;
    }
    if (this.mesh) {
      this.scene.remove(this.mesh);
      this.geometry?.dispose();
    }
    this.geometry = new THREE.BufferGeometry();
    this.geometry.setAttribute("position", new THREE.BufferAttribute(positions, 3));
    this.geometry.setIndex(faces);
    this.geometry.computeVertexNormals();
    const material = new THREE.MeshStandardMaterial({
      color: 0xc8ccd4,
      roughness: 0.65,
      metalness: 0.05,
      side: THREE.DoubleSide,
      flatShading: false,
    });
    this.mesh = new THREE.Mesh(this.geometry, material);
    this.scene.add(this.mesh);
    this.frameMesh();
  }

  private frameMesh(): void {
    if (!this.geometry) return;
    this.geometry.computeBoundingSphere();
    const sphere = this.geometry.boundingSphere;
    if (!sphere) return;
    this.target.copy(sphere.center);
    this.distance = sphere.radius * 2.6;
  }

  private bindControls(): void {
    const el = this.renderer.domElement;
    let dragging = false;
    let lastX = 0;
    let lastY = 0;
    el.addEventListener("pointerdown", (e) => {
      dragging = true;
      lastX = e.clientX;
      lastY = e.clientY;
      el.setPointerCapture(e.pointerId);
    });
    el.addEventListener("pointermove", (e) => {
      if (!dragging) return;
      this.theta -= (e.clientX - lastX) * 0.008;
      this.phi = Math.min(3.0, Math.max(0.15, this.phi - (e.clientY - lastY) * 0.008));
      lastX = e.clientX;
      lastY = e.clientY;
    });
    el.addEventListener("pointerup", () => {
      dragging = false;
    });
    el.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.distance *= Math.exp(e.deltaY * 0.001);
    });
  }

  private resize(): void {
    const w = this.container.clientWidth || 640;
    const h = this.container.clientHeight || 480;
    this.renderer.setSize(w, h);
    this.camera.aspect = w / h;
    this.camera.updateProjectionMatrix();
  }

  private animate = (): void => {
    requestAnimationFrame(this.animate);
    const sp = Math.sin(this.phi);
    this.camera.position.set(
      this.target.x + this.distance * sp * Math.cos(this.theta),
      this.target.y + this.distance * sp * Math.sin(this.theta),
      this.target.z + this.distance * Math.cos(this.phi),
    );
    this.camera.up.set(0, 0, 1);
    this.camera.lookAt(this.target);
    this.renderer.render(this.scene, this.camera);
  };
}
