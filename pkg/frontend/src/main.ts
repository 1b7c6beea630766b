import { postImage } from "./api.js";
import { buildScoreView, renderScoreRows } from "./scores.js";
import { UploadController, UploadState } from "./state.js";

// Service base URL: injected at deploy time via a global, defaults to
// same-origin so the static assets can be served next to the API.
const apiBase: string =
  (window as { ROOMTAGGER_API_BASE?: string }).ROOMTAGGER_API_BASE ?? "";

function element<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

const uploadView = element<HTMLElement>("upload-view");
const resultView = element<HTMLElement>("result-view");
const dropZone = element<HTMLElement>("drop-zone");
const fileInput = element<HTMLInputElement>("file-input");
const fileName = element<HTMLElement>("file-name");
const submitButton = element<HTMLButtonElement>("submit-button");
const resetButton = element<HTMLButtonElement>("reset-button");
const statusLine = element<HTMLElement>("status-line");
const preview = element<HTMLImageElement>("preview");
const scoreList = element<HTMLElement>("score-list");
const topTag = element<HTMLElement>("top-tag");

let previewUrl: string | null = null;

function showPreview(file: File): void {
  if (previewUrl !== null) {
    URL.revokeObjectURL(previewUrl);
  }
  previewUrl = URL.createObjectURL(file);
  preview.src = previewUrl;
}

function render(state: UploadState): void {
  const resultMode = state.phase === "done";
  uploadView.hidden = resultMode;
  resultView.hidden = !resultMode;
  submitButton.disabled = !controller.canSubmit();
  fileName.textContent = state.file ? state.file.name : "no file selected";

  switch (state.phase) {
    case "idle":
      statusLine.textContent = state.file ? "Ready to tag." : "";
      statusLine.className = "status";
      break;
    case "uploading":
      statusLine.textContent = "Uploading…";
      statusLine.className = "status busy";
      break;
    case "error":
      statusLine.textContent = state.error ?? "Something went wrong.";
      statusLine.className = "status error";
      break;
    case "done": {
      const view = buildScoreView(state.scores);
      scoreList.innerHTML = renderScoreRows(view);
      topTag.textContent = view.kind === "scores" ? view.top : "unknown";
      break;
    }
  }
}

const controller = new UploadController((file) => postImage(file, apiBase), render);

fileInput.addEventListener("change", () => {
  const file = fileInput.files?.[0];
  if (file) {
    showPreview(file);
    controller.selectFile(file);
  }
});

dropZone.addEventListener("dragover", (event) => {
  event.preventDefault();
  dropZone.classList.add("dragging");
});
dropZone.addEventListener("dragleave", () => dropZone.classList.remove("dragging"));
dropZone.addEventListener("drop", (event) => {
  event.preventDefault();
  dropZone.classList.remove("dragging");
  const file = event.dataTransfer?.files?.[0];
  if (file) {
    showPreview(file);
    controller.selectFile(file);
  }
});

submitButton.addEventListener("click", () => {
  void controller.submit();
});

resetButton.addEventListener("click", () => {
  fileInput.value = "";
  controller.clearFile();
});

render(controller.getState());
