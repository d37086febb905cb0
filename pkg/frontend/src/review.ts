// Data assembly for the end-of-session review: fixed-scale filmstrip,
// per-region sparklines per phase, and the delta/trend tables.

import { ServiceApi } from "./api.js";
import { parseCsv, type CsvTable } from "./csv.js";
import type { RenderIndex, SessionSummary } from "./types.js";

export interface SparklineSeries {
  roi: string;
  phase: string;
  values: number[];
  times: string[];
}

export interface ReviewData {
  sessionId: string;
  summary: SessionSummary;
  renderIndex: RenderIndex;
  deltas: CsvTable;
  trends: CsvTable;
  noseDivergence: CsvTable;
  sparklines: SparklineSeries[];
  scale: { minC: number; maxC: number };
  exportUrl: string;
}

export class ReviewController {
  constructor(private readonly api: ServiceApi) {}

  async load(sessionId: string): Promise<ReviewData> {
    const [summary, renderIndex, deltasText, trendsText, statsText, noseText] =
      await Promise.all([
        this.api.summary(sessionId),
        this.api.renderIndex(sessionId),
        this.api.table(sessionId, "deltas.csv"),
        this.api.table(sessionId, "trends.csv"),
        this.api.table(sessionId, "stats.csv"),
        this.api.table(sessionId, "nose_divergence.csv"),
      ]);
    return {
      sessionId,
      summary,
      renderIndex,
      deltas: parseCsv(deltasText),
      trends: parseCsv(trendsText),
      noseDivergence: parseCsv(noseText),
      sparklines: buildSparklines(parseCsv(statsText), renderIndex),
      scale: { minC: renderIndex.scale_min_c, maxC: renderIndex.scale_max_c },
      exportUrl: this.api.bundleUrl(sessionId),
    };
  }
}

export function buildSparklines(stats: CsvTable, index: RenderIndex): SparklineSeries[] {
  const phaseBySeq = new Map(index.renders.map((r) => [r.seq, r.phase]));
  const capture = stats.header.indexOf("capture");
  const roi = stats.header.indexOf("roi");
  const mean = stats.header.indexOf("mean_c");
  const time = stats.header.indexOf("timestamp");
  const grouped = new Map<string, SparklineSeries>();
  for (const row of stats.rows) {
    const seq = Number(row[capture]);
    const phase = phaseBySeq.get(seq) ?? "sequence";
    const key = `${row[roi]}|${phase}`;
    let series = grouped.get(key);
    if (!series) {
      series = { roi: row[roi], phase, values: [], times: [] };
      grouped.set(key, series);
    }
    series.values.push(Number(row[mean]));
    series.times.push(row[time]);
  }
  return [...grouped.values()];
}
