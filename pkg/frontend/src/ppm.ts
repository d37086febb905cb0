// Parser for the service's binary pixmap renders (P6 with the session scale
// recorded in a header comment), producing RGBA bytes ready for a canvas.

export interface ParsedRender {
  width: number;
  height: number;
  scaleMinC: number;
  scaleMaxC: number;
  rgba: Uint8ClampedArray<ArrayBuffer>;
}

export function parsePpm(data: Uint8Array): ParsedRender {
  const marker = new TextEncoder().encode("255\n");
  let headerEnd = -1;
  for (let i = 0; i + marker.length <= data.length; i += 1) {
    if (marker.every((b, j) => data[i + j] === b)) {
      headerEnd = i + marker.length;
      break;
    }
  }
  if (headerEnd < 0) {
    throw new Error("not a maxval-255 P6 pixmap");
  }
  const header = new TextDecoder().decode(data.slice(0, headerEnd));
  const lines = header.split("\n");
  if (lines[0] !== "P6") {
    throw new Error("not a P6 pixmap");
  }
  const scaleLine = lines.find((l) => l.startsWith("# scale_min_c="));
  if (!scaleLine) {
    throw new Error("render is missing its scale metadata");
  }
  const fields = Object.fromEntries(
    scaleLine.slice(2).split(" ").map((pair) => pair.split("=") as [string, string]),
  );
  const dims = lines.find((l) => l && !l.startsWith("#") && l !== "P6");
  if (!dims) {
    throw new Error("render is missing its dimensions");
  }
  const [width, height] = dims.trim().split(/\s+/).map(Number);
  const pixels = data.slice(headerEnd);
  if (pixels.length !== width * height * 3) {
    throw new Error("render payload does not match its dimensions");
  }
  const rgba = new Uint8ClampedArray(width * height * 4);
  for (let i = 0; i < width * height; i += 1) {
    rgba[i * 4] = pixels[i * 3];
    rgba[i * 4 + 1] = pixels[i * 3 + 1];
    rgba[i * 4 + 2] = pixels[i * 3 + 2];
    rgba[i * 4 + 3] = 255;
  }
  return {
    width,
    height,
    scaleMinC: Number(fields.scale_min_c),
    scaleMaxC: Number(fields.scale_max_c),
    rgba,
  };
}
