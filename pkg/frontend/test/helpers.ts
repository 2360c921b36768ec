import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";

import {
  InstallResponse,
  QueryResponse,
  StateSnapshot,
} from "../src/types.js";

export interface RecordedSession {
  manifest: Record<string, unknown>;
  state_initial: StateSnapshot;
  install: InstallResponse;
  query_1: QueryResponse;
  query_2: QueryResponse;
  state_final: StateSnapshot;
  pets: unknown[];
  selection: Record<string, unknown>;
  install_error: { status: number; body: { error: string; message: string } };
}

export function loadSession(): RecordedSession {
  const path = fileURLToPath(
    new URL("../../test/fixtures/session.json", import.meta.url),
  );
  return JSON.parse(readFileSync(path, "utf-8")) as RecordedSession;
}

export function fixturePath(relative: string): string {
  return fileURLToPath(new URL(`../../test/fixtures/${relative}`, import.meta.url));
}

export function repoPath(relative: string): string {
  return fileURLToPath(new URL(`../../../${relative}`, import.meta.url));
}

/** Canvas stand-in that records draw calls for assertions. */
export class RecordingCanvas {
  fillStyle: string = "";
  strokeStyle: string = "";
  lineWidth = 1;
  calls: { op: string; args: unknown[]; fillStyle: string }[] = [];

  private log(op: string, ...args: unknown[]): void {
    this.calls.push({ op, args, fillStyle: this.fillStyle });
  }

  fillRect(...args: unknown[]): void { this.log("fillRect", ...args); }
  strokeRect(...args: unknown[]): void { this.log("strokeRect", ...args); }
  beginPath(): void { this.log("beginPath"); }
  arc(...args: unknown[]): void { this.log("arc", ...args); }
  fill(): void { this.log("fill"); }
  stroke(): void { this.log("stroke"); }
  moveTo(...args: unknown[]): void { this.log("moveTo", ...args); }
  lineTo(...args: unknown[]): void { this.log("lineTo", ...args); }
  fillText(...args: unknown[]): void { this.log("fillText", ...args); }

  /** fill colors used for arc+fill sequences, in draw order */
  dotColors(): string[] {
    const colors: string[] = [];
    for (let i = 0; i < this.calls.length; i += 1) {
      if (this.calls[i].op === "fill" && i > 0 && this.calls[i - 1].op === "arc") {
        colors.push(this.calls[i].fillStyle);
      }
    }
    return colors;
  }
}
