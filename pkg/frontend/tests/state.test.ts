import { describe, expect, it, vi } from "vitest";

import { PredictionScores } from "../src/labels.js";
import { UploadController, UploadState } from "../src/state.js";

const SCORES: PredictionScores = {
  balcony: 0.01,
  bathroom: 0.9,
  bedroom: 0.03,
  hall: 0.02,
  kitchen: 0.02,
  others: 0.02,
};

function someFile(name = "room.png"): File {
  return new File([new Uint8Array([137, 80, 78, 71])], name, { type: "image/png" });
}

function deferred<T>() {
  let resolve!: (value: T) => void;
  let reject!: (reason: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

describe("UploadController", () => {
  it("starts idle with nothing selected", () => {
    const controller = new UploadController(vi.fn());
    expect(controller.getState()).toEqual({
      phase: "idle",
      file: null,
      scores: null,
      error: null,
    });
    expect(controller.canSubmit()).toBe(false);
  });

  it("never issues a request without a selected file", async () => {
    const post = vi.fn();
    const controller = new UploadController(post);
    expect(await controller.submit()).toBe(false);
    expect(post).not.toHaveBeenCalled();
    expect(controller.getState().phase).toBe("idle");
  });

  it("runs idle -> uploading -> done on a mocked 200", async () => {
    const post = vi.fn().mockResolvedValue(SCORES);
    const phases: string[] = [];
    const controller = new UploadController(post, (state) => phases.push(state.phase));
    controller.selectFile(someFile());
    expect(controller.canSubmit()).toBe(true);

    expect(await controller.submit()).toBe(true);
    expect(phases).toEqual(["idle", "uploading", "done"]);
    const state = controller.getState();
    expect(state.scores).toEqual(SCORES);
    expect(state.error).toBeNull();
    expect(state.file?.name).toBe("room.png");
    expect(post).toHaveBeenCalledTimes(1);
  });

  it("lands in the error phase with a message on a mocked 415", async () => {
    const post = vi.fn().mockRejectedValue(new Error("That file does not look like a decodable image."));
    const controller = new UploadController(post);
    controller.selectFile(someFile("notes.txt"));
    expect(await controller.submit()).toBe(true);
    const state = controller.getState();
    expect(state.phase).toBe("error");
    expect(state.error).toMatch(/decodable image/);
    expect(state.scores).toBeNull();
  });

  it("never surfaces an unhandled rejection", async () => {
    const post = vi.fn().mockRejectedValue("string failure");
    const controller = new UploadController(post);
    controller.selectFile(someFile());
    await expect(controller.submit()).resolves.toBe(true);
    expect(controller.getState().error).toBe("string failure");
  });

  it("debounces a double submit to one in-flight request", async () => {
    const gate = deferred<PredictionScores>();
    const post = vi.fn().mockReturnValue(gate.promise);
    const controller = new UploadController(post);
    controller.selectFile(someFile());

    const first = controller.submit();
    const second = controller.submit(); // while the first is in flight
    gate.resolve(SCORES);
    expect(await first).toBe(true);
    expect(await second).toBe(false);
    expect(post).toHaveBeenCalledTimes(1);
    expect(controller.getState().phase).toBe("done");
  });

  it("ignores file changes while uploading", async () => {
    const gate = deferred<PredictionScores>();
    const controller = new UploadController(() => gate.promise);
    controller.selectFile(someFile("first.png"));
    const pending = controller.submit();
    expect(controller.selectFile(someFile("second.png"))).toBe(false);
    gate.resolve(SCORES);
    await pending;
    expect(controller.getState().file?.name).toBe("first.png");
  });

  it("allows a resubmit after completion", async () => {
    const post = vi.fn().mockResolvedValue(SCORES);
    const controller = new UploadController(post);
    controller.selectFile(someFile());
    await controller.submit();
    await controller.submit();
    expect(post).toHaveBeenCalledTimes(2);
  });

  it("clearFile returns to the initial state", async () => {
    const controller = new UploadController(vi.fn().mockResolvedValue(SCORES));
    controller.selectFile(someFile());
    await controller.submit();
    controller.clearFile();
    expect(controller.getState()).toEqual({
      phase: "idle",
      file: null,
      scores: null,
      error: null,
    });
  });

  it("holds the state invariants in every observed transition", async () => {
    const observed: UploadState[] = [];
    const post = vi.fn().mockResolvedValueOnce(SCORES).mockRejectedValueOnce(new Error("x"));
    const controller = new UploadController(post, (state) => observed.push(state));
    controller.selectFile(someFile());
    await controller.submit();
    await controller.submit();
    for (const state of observed) {
      expect(state.scores !== null).toBe(state.phase === "done");
      expect(state.error !== null).toBe(state.phase === "error");
    }
  });
});
