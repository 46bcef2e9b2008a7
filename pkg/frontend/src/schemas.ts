/**
 * Zod schemas for the engine's versioned result files and for figure specs.
 *
 * Every input carries a schema_version; a mismatch is a hard error so a
 * stale renderer never silently misreads a newer bundle.
 */
import { z } from "zod";

export const SCHEMA_VERSION = 1;

export class SchemaMismatch extends Error {}
export class MissingSeries extends Error {}

const versioned = z.object({ schema_version: z.number() });

export function checkVersion(payload: unknown, what: string): void {
  const parsed = versioned.safeParse(payload);
  if (!parsed.success || parsed.data.schema_version !== SCHEMA_VERSION) {
    throw new SchemaMismatch(
      `${what}: expected schema_version ${SCHEMA_VERSION}`,
    );
  }
}

export const IrfQuantilesSchema = z.object({
  schema_version: z.literal(SCHEMA_VERSION),
  variables: z.array(z.string()),
  shocks: z.array(z.string()),
  horizons: z.array(z.number()),
  quantiles: z.object({
    q16: z.array(z.array(z.array(z.number()))),
    q50: z.array(z.array(z.array(z.number()))),
    q84: z.array(z.array(z.array(z.number()))),
  }),
});
export type IrfQuantiles = z.infer<typeof IrfQuantilesSchema>;

export const PrefixCurvesSchema = z.object({
  schema_version: z.literal(SCHEMA_VERSION),
  stride: z.number(),
  parameters: z.array(z.string()),
  points: z.array(
    z.object({
      iterations: z.number(),
      max_rhat: z.union([z.number(), z.string(), z.null()]),
      min_bulk_ess: z.union([z.number(), z.string(), z.null()]),
      min_tail_ess: z.union([z.number(), z.string(), z.null()]),
    }),
  ),
});
export type PrefixCurves = z.infer<typeof PrefixCurvesSchema>;

export const AcfPayloadSchema = z.object({
  schema_version: z.literal(SCHEMA_VERSION),
  acf_max_lag: z.number(),
  acf: z.record(z.string(), z.array(z.number())),
});
export type AcfPayload = z.infer<typeof AcfPayloadSchema>;

export const FigureSpecSchema = z.object({
  kind: z.enum([
    "irf_fan",
    "trace",
    "acf",
    "rhat_curve",
    "ess_curve",
    "histogram_with_analytic",
  ]),
  inputs: z.record(z.string(), z.string()),
  out: z.string(),
  title: z.string().optional(),
  width: z.number().int().positive().default(720),
  height: z.number().int().positive().default(480),
  // selections
  variables: z.array(z.string()).optional(),
  shocks: z.array(z.string()).optional(),
  series: z.string().optional(),
  chain: z.number().int().nonnegative().default(0),
  bins: z.number().int().positive().default(40),
  max_lag: z.number().int().positive().optional(),
  threshold: z.number().optional(),
});
export type FigureSpec = z.infer<typeof FigureSpecSchema>;

export const FigureFileSchema = z.union([
  FigureSpecSchema,
  z.array(FigureSpecSchema),
]);
