// SVG path for a compact temperature series, drawn in a fixed y-range so
// sparklines stay comparable across phases and sessions.

export function sparklinePath(
  values: number[],
  width: number,
  height: number,
  yMin: number,
  yMax: number,
): string {
  if (values.length === 0 || yMax <= yMin) {
    return "";
  }
  const span = yMax - yMin;
  const step = values.length > 1 ? width / (values.length - 1) : 0;
  const points = values.map((v, i) => {
    const x = i * step;
    const clamped = Math.min(yMax, Math.max(yMin, v));
    const y = height - ((clamped - yMin) / span) * height;
    return `${x.toFixed(2)},${y.toFixed(2)}`;
  });
  return `M ${points[0]} ` + points.slice(1).map((p) => `L ${p}`).join(" ");
}
