import { PredictionScores } from "./labels.js";

export type UploadPhase = "idle" | "uploading" | "done" | "error";

export interface FileMeta {
  name: string;
  size: number;
  type: string;
}

export interface UploadState {
  phase: UploadPhase;
  file: FileMeta | null;
  /** present exactly when phase === "done" */
  scores: PredictionScores | null;
  /** present exactly when phase === "error" */
  error: string | null;
}

export type PostFn = (file: File | Blob) => Promise<PredictionScores>;
export type StateListener = (state: UploadState) => void;

export const INITIAL_STATE: UploadState = {
  phase: "idle",
  file: null,
  scores: null,
  error: null,
};

/**
 * Upload lifecycle: idle -> uploading -> done | error. One in-flight
 * request at a time (double submits are ignored), and no request is ever
 * issued without a selected file. All failures land in the error phase;
 * submit never rejects.
 */
export class UploadController {
  private state: UploadState = INITIAL_STATE;
  private selected: File | Blob | null = null;
  private inFlight = false;

  constructor(
    private readonly post: PostFn,
    private readonly onChange: StateListener = () => undefined,
  ) {}

  getState(): UploadState {
    return this.state;
  }

  private setState(next: UploadState): void {
    if ((next.scores !== null) !== (next.phase === "done")) {
      throw new Error("scores must be present exactly in the done phase");
    }
    if ((next.error !== null) !== (next.phase === "error")) {
      throw new Error("error message must be present exactly in the error phase");
    }
    this.state = next;
    this.onChange(next);
  }

  /** Returns false (and changes nothing) while a request is in flight. */
  selectFile(file: File): boolean {
    if (this.inFlight) {
      return false;
    }
    this.selected = file;
    this.setState({
      phase: "idle",
      file: { name: file.name, size: file.size, type: file.type },
      scores: null,
      error: null,
    });
    return true;
  }

  clearFile(): void {
    if (this.inFlight) {
      return;
    }
    this.selected = null;
    this.setState(INITIAL_STATE);
  }

  canSubmit(): boolean {
    return this.selected !== null && !this.inFlight;
  }

  /**
   * Issue the upload; resolves true if a request was made, false if it was
   * suppressed (no file selected, or one already in flight).
   */
  async submit(): Promise<boolean> {
    if (!this.canSubmit() || this.selected === null) {
      return false;
    }
    this.inFlight = true;
    this.setState({ ...this.state, phase: "uploading", scores: null, error: null });
    try {
      const scores = await this.post(this.selected);
      this.setState({ ...this.state, phase: "done", scores, error: null });
    } catch (error) {
      this.setState({
        ...this.state,
        phase: "error",
        scores: null,
        error: error instanceof Error ? error.message : String(error),
      });
    } finally {
      this.inFlight = false;
    }
    return true;
  }
}
