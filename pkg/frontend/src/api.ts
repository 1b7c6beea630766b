import { PredictionScores } from "./labels.js";
import { parseScores, SchemaError } from "./scores.js";

export const DEFAULT_ENDPOINT = "/re-tagger";

export class ApiError extends Error {
  status: number | null;

  constructor(message: string, status: number | null = null) {
    super(message);
    this.status = status;
  }
}

function statusMessage(status: number): string {
  switch (status) {
    case 400:
      return "The request was rejected (missing image field).";
    case 413:
      return "This image is too large for the service.";
    case 415:
      return "That file does not look like a decodable image.";
    case 503:
      return "The service is still starting up; try again in a moment.";
    default:
      return `The service answered with status ${status}.`;
  }
}

/**
 * POST the selected file as multipart field `image`; resolves to validated
 * scores, rejects with ApiError (human-readable message) on any failure.
 */
export async function postImage(
  file: File | Blob,
  baseUrl = "",
): Promise<PredictionScores> {
  const form = new FormData();
  const name = file instanceof File ? file.name : "upload.bin";
  form.append("image", file, name);

  let response: Response;
  try {
    response = await fetch(baseUrl + DEFAULT_ENDPOINT, {
      method: "POST",
      body: form,
    });
  } catch (error) {
    throw new ApiError(
      `Could not reach the tagging service: ${error instanceof Error ? error.message : String(error)}`,
    );
  }
  if (!response.ok) {
    throw new ApiError(statusMessage(response.status), response.status);
  }
  let body: unknown;
  try {
    body = await response.json();
  } catch {
    throw new ApiError("The service returned a non-JSON body.", response.status);
  }
  try {
    return parseScores(body);
  } catch (error) {
    if (error instanceof SchemaError) {
      throw new ApiError(`Malformed score payload: ${error.message}`, response.status);
    }
    throw error;
  }
}

export async function checkHealth(
  baseUrl = "",
): Promise<{ status: string; bundle_version?: string }> {
  const response = await fetch(baseUrl + "/healthz");
  if (!response.ok) {
    throw new ApiError(statusMessage(response.status), response.status);
  }
  return (await response.json()) as { status: string; bundle_version?: string };
}
