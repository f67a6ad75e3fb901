import { formatReadout, SessionState } from "./state.js";
import type { UiModelDescriptor } from "./types.js";

export interface PanelCallbacks {
  onSlider: (label: string, value: number) => void;
  onSelectModel: (id: string) => void;
  onReset: () => void;
  /** Switch to the counterpart model of the other kind, when loaded. */
  onToggleKind?: () => void;
}

/** Slider column plus the requested / re-measured readout table. */
export class ControlPanel {
  private sliderInputs = new Map<string, HTMLInputElement>();
  private sliderValueEls = new Map<string, HTMLElement>();
  private readoutBody: HTMLElement;
  private banner: HTMLElement;
  private modelSelect: HTMLSelectElement;

  constructor(
    private readonly root: HTMLElement,
    descriptors: UiModelDescriptor[],
    private readonly callbacks: PanelCallbacks,
  ) {
    this.root.innerHTML = "";
    const header = document.createElement("div");
    header.className = "panel-header";
    this.modelSelect = document.createElement("select");
    for (const d of descriptors) {
      const option = document.createElement("option");
      option.value = d.id;
      option.textContent = `${d.id} (${d.kind})`;
      this.modelSelect.appendChild(option);
    }
    this.modelSelect.addEventListener("change", () =>
      this.callbacks.onSelectModel(this.modelSelect.value),
    );
    header.appendChild(this.modelSelect);
    if (this.callbacks.onToggleKind) {
      this.toggleButton = document.createElement("button");
      this.toggleButton.textContent = "anat ⇄ oc";
      this.toggleButton.addEventListener("click", () =>
        this.callbacks.onToggleKind?.(),
      );
      header.appendChild(this.toggleButton);
    }
    const reset = document.createElement("button");
    reset.textContent = "reset";
    reset.addEventListener("click", () => this.callbacks.onReset());
    header.appendChild(reset);
    this.root.appendChild(header);

    this.banner = document.createElement("div");
    this.banner.className = "banner hidden";
    this.root.appendChild(this.banner);

    const sliders = document.createElement("div");
    sliders.className = "sliders";
    this.root.appendChild(sliders);
    this.slidersEl = sliders;

    const table = document.createElement("table");
    table.className = "readout";
    table.innerHTML =
      "<thead><tr><th>parameter</th><th>requested</th>" +
      "<th>re-measured</th><th>diff</th></tr></thead>";
    this.readoutBody = document.createElement("tbody");
    table.appendChild(this.readoutBody);
    this.root.appendChild(table);
  }

  private slidersEl: HTMLElement;
  private toggleButton: HTMLButtonElement | null = null;

  setToggleEnabled(enabled: boolean): void {
    if (this.toggleButton) this.toggleButton.disabled = !enabled;
  }

  /** Rebuild sliders for the selected model (ordered by variability). */
  bindSession(session: SessionState): void {
    this.modelSelect.value = session.descriptor.id;
    this.slidersEl.innerHTML = "";
    this.sliderInputs.clear();
    this.sliderValueEls.clear();
    for (const spec of session.sliders) {
      const row = document.createElement("div");
      row.className = "slider-row";
      const name = document.createElement("label");
      name.textContent =
        `${spec.label} (${spec.unit}, ` +
        `${(100 * spec.variability).toFixed(1)}% var)`;
      const input = document.createElement("input");
      input.type = "range";
      input.min = String(spec.min);
      input.max = String(spec.max);
      input.step = String((spec.max - spec.min) / 200);
      input.value = String(session.value(spec.label));
      const valueEl = document.createElement("span");
      valueEl.textContent = formatReadout(session.value(spec.label));
      input.addEventListener("input", () =>
        this.callbacks.onSlider(spec.label, Number(input.value)),
      );
      row.append(name, input, valueEl);
      this.slidersEl.appendChild(row);
      this.sliderInputs.set(spec.label, input);
      this.sliderValueEls.set(spec.label, valueEl);
    }
    this.renderReadout(session);
  }

  reflectValue(label: string, value: number): void {
    const el = this.sliderValueEls.get(label);
    if (el) el.textContent = formatReadout(value);
    const input = this.sliderInputs.get(label);
    if (input && Number(input.value) !== value) input.value = String(value);
  }

  /** Measured values come verbatim from the service response. */
  renderReadout(session: SessionState): void {
    this.readoutBody.innerHTML = "";
    for (const row of session.readoutRows()) {
      const tr = document.createElement("tr");
      tr.innerHTML =
        `<td>${row.label} (${row.unit})</td>` +
        `<td>${formatReadout(row.requested)}</td>` +
        `<td>${formatReadout(row.measured)}</td>` +
        `<td>${formatReadout(row.difference)}</td>`;
      this.readoutBody.appendChild(tr);
    }
  }

  showBanner(message: string): void {
    this.banner.textContent = message;
    this.banner.classList.remove("hidden");
  }

  hideBanner(): void {
    this.banner.classList.add("hidden");
  }
}
