/** Wire formats of the synthesis service (mirrors its JSON API). */

export interface ExemplarInfo {
  id: number;
  name: string;
  tags: string[];
  thumbnail_png_base64: string;
}

export interface SynthesisRequest {
  input_png_base64: string;
  stage1: "bicubic" | "external";
  ids: number[];
  ks: number[];
  ts: number[];
  seed: number;
}

export interface CandidateResult {
  k: number;
  t: number;
  clamped_pixel_count: number;
  image_png_base64: string;
  id_map_png_base64: string;
  /** exemplar id -> "#rrggbb" legend for the id-map overlay */
  palette: Record<string, string>;
}

export interface JobManifest {
  ks: number[];
  ts: number[];
  seed: number;
  exemplar_ids: number[];
  candidate_count: number;
}

export type JobResult =
  | { status: "running" }
  | { status: "error"; error: string }
  | { status: "done"; manifest: JobManifest; candidates: CandidateResult[] };

export interface HealthInfo {
  status: string;
  exemplar_count: number;
  image_size: [number, number];
}
