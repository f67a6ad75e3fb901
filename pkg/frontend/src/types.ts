/** Wire types mirroring the model service payloads. */

export interface LabelStats {
  mean: number;
  std: number;
  unit: string;
}

export interface UiModelDescriptor {
  id: string;
  kind: "anat" | "oc-anat";
  labels: string[];
  stats: Record<string, LabelStats>;
  variability: {
    fractions: Record<string, number>;
    order: string[];
  };
}

export interface GenerateResponse {
  mesh: {
    vertices: number[];
    faces: number[];
  };
  measurements: Record<string, { value: number; unit: string }>;
  beta_std: Record<string, number>;
  recipe_measurements: Record<string, number> | null;
}

export interface SweepResponse {
  param: string;
  labels: string[];
  t_values: number[];
  readout_std: number[][];
  readout_physical: number[][];
  slopes: Record<string, number>;
}
