export * from "./schemas.js";
export * from "./csv.js";
export * from "./svg.js";
export * from "./figures.js";
export { run } from "./cli.js";
