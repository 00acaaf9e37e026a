export * from "./schema.js";
export * from "./svg.js";
export * from "./figures.js";
export { loadSpec, runSpec } from "./cli.js";
