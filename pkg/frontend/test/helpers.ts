import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { ApiError } from "../src/api.js";
import { ServiceError } from "../src/api.js";
import type { Screen } from "../src/controller.js";

const fixtureDir = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

export function loadFixture<T>(name: string): T {
  return JSON.parse(readFileSync(join(fixtureDir, `${name}.json`), "utf-8")) as T;
}

export function serviceError(fixtureName: string): ServiceError {
  return new ServiceError(loadFixture<ApiError>(fixtureName));
}

/** Captures rendered output; content keeps its history so tests can
 * assert what each refresh painted. */
export class FakeScreen implements Screen {
  contents: string[] = [];
  banner = "";

  setContent(html: string): void {
    this.contents.push(html);
  }

  setBanner(html: string): void {
    this.banner = html;
  }

  get content(): string {
    return this.contents[this.contents.length - 1] ?? "";
  }
}

export function countOccurrences(haystack: string, needle: string): number {
  return haystack.split(needle).length - 1;
}
