/**
 * Headless SVG rendering of the Story Overview. Produces a plain SVG string:
 * one `<path class="ribbon">` per visible entity (multiple presence runs
 * become subpaths of the same path), plus one label per x-axis step styled by
 * the active label encoding.
 */

import type { StoryData, ViewState, LabelEncoding } from './types.js';
import { layoutRibbons, type LayoutOptions, type RibbonSegment, type TimeStep } from './layout.js';
import { sentimentColor } from './colors.js';
import type { ChapterNetwork } from './views.js';

const LABEL_BAND = 24;

function fmt(n: number): string {
  return (Math.round(n * 100) / 100).toString();
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

/**
 * Closed outline around a presence run: the top edge follows the anchor curve
 * at -thickness/2, the bottom edge returns at +thickness/2. Isolated anchors
 * become a short lens so single-scene presences stay visible.
 */
function segmentOutline(segment: RibbonSegment, steps: TimeStep[]): string {
  const anchors = segment.anchors;
  if (anchors.length === 0) return '';
  if (anchors.length === 1) {
    const a = anchors[0]!;
    const step = steps[a.stepIndex];
    const half = Math.min((step?.width ?? 20) * 0.3, 10);
    const t = a.thickness / 2;
    return (
      `M ${fmt(a.x - half)} ${fmt(a.y - t)} ` +
      `L ${fmt(a.x + half)} ${fmt(a.y - t)} ` +
      `L ${fmt(a.x + half)} ${fmt(a.y + t)} ` +
      `L ${fmt(a.x - half)} ${fmt(a.y + t)} Z`
    );
  }

  const first = anchors[0]!;
  let d = `M ${fmt(first.x)} ${fmt(first.y - first.thickness / 2)} `;
  segment.curves.forEach((c, i) => {
    const ta = anchors[i]!.thickness / 2;
    const tb = anchors[i + 1]!.thickness / 2;
    d +=
      `C ${fmt(c.c1x)} ${fmt(c.c1y - ta)}, ${fmt(c.c2x)} ${fmt(c.c2y - tb)}, ` +
      `${fmt(c.x1)} ${fmt(c.y1 - tb)} `;
  });
  const last = anchors[anchors.length - 1]!;
  d += `L ${fmt(last.x)} ${fmt(last.y + last.thickness / 2)} `;
  for (let i = segment.curves.length - 1; i >= 0; i--) {
    const c = segment.curves[i]!;
    const ta = anchors[i]!.thickness / 2;
    const tb = anchors[i + 1]!.thickness / 2;
    d +=
      `C ${fmt(c.c2x)} ${fmt(c.c2y + tb)}, ${fmt(c.c1x)} ${fmt(c.c1y + ta)}, ` +
      `${fmt(c.x0)} ${fmt(c.y0 + ta)} `;
  }
  return d + 'Z';
}

interface LabelStyle {
  size: number;
  weight: number;
  fill: string;
}

/** Label color, size, and weight encode the chosen per-step rating. */
export function labelStyle(story: StoryData, step: TimeStep, encoding: LabelEncoding): LabelStyle {
  const summary = story.chapter_summaries.find((s) => s.chapter_index === step.chapterIndex);
  const scene =
    step.sceneIndex === null
      ? null
      : story.scenes.find(
          (s) => s.chapter_index === step.chapterIndex && s.scene_index === step.sceneIndex,
        );
  const ratings = scene ? scene.ratings : summary?.ratings;

  let value = 0;
  switch (encoding) {
    case 'importance':
      value = ratings?.importance ?? 0;
      break;
    case 'conflict':
      value = ratings?.conflict ?? 0;
      break;
    case 'sentiment':
      value = ratings?.sentiment ?? 0;
      break;
    case 'length': {
      const peers = scene ? story.scenes : story.chapters;
      const max = Math.max(1, ...peers.map((p) => p.line_end - p.line_start));
      value = step.lineCount / max;
      break;
    }
    case 'num_characters': {
      const count = (s: { appearances: { kind: string }[] }) =>
        s.appearances.filter((a) => a.kind === 'character').length;
      const here = scene
        ? count(scene)
        : Object.keys(summary?.character_counts ?? {}).length;
      const max = Math.max(
        1,
        ...(scene
          ? story.scenes.map(count)
          : story.chapter_summaries.map((s) => Object.keys(s.character_counts).length)),
      );
      value = here / max;
      break;
    }
  }

  if (encoding === 'sentiment') {
    const t = Math.abs(Math.min(Math.max(value, -1), 1));
    return { size: 8 + 6 * t, weight: t > 0.5 ? 700 : 400, fill: sentimentColor(value) };
  }
  const t = Math.min(Math.max(value, 0), 1);
  const grey = Math.round(136 - 120 * t);
  const hex = grey.toString(16).padStart(2, '0');
  return { size: 8 + 6 * t, weight: t > 0.5 ? 700 : 400, fill: `#${hex}${hex}${hex}` };
}

/** Render the overview to a standalone SVG string. */
export function renderOverview(
  story: StoryData,
  state: ViewState,
  options: LayoutOptions = {},
): string {
  const layout = layoutRibbons(story, state, options);
  const highlighted = new Set(state.highlighted);
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${layout.width}" ` +
      `height="${layout.height + LABEL_BAND}" ` +
      `viewBox="0 0 ${layout.width} ${layout.height + LABEL_BAND}">`,
  );

  for (const step of layout.steps) {
    const style = labelStyle(story, step, state.label_encoding);
    parts.push(
      `<text class="step-label" x="${fmt(step.x)}" y="${fmt(layout.height + 16)}" ` +
        `text-anchor="middle" font-size="${fmt(style.size)}" ` +
        `font-weight="${style.weight}" fill="${style.fill}">` +
        `${escapeXml(step.label)}</text>`,
    );
  }

  for (const ribbon of layout.ribbons) {
    const d = ribbon.segments.map((s) => segmentOutline(s, layout.steps)).join(' ');
    const dim = highlighted.size > 0 && !highlighted.has(ribbon.entityId);
    parts.push(
      `<path class="ribbon" data-entity="${escapeXml(ribbon.entityId)}" ` +
        `fill="${ribbon.color}" opacity="${dim ? '0.15' : '0.85'}" d="${d.trim()}">` +
        `<title>${escapeXml(ribbon.name)}</title></path>`,
    );
  }

  parts.push('</svg>');
  return parts.join('\n');
}

/** Render a chapter character network as a standalone SVG string. */
export function renderNetwork(net: ChapterNetwork, size = 400): string {
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${size}" height="${size}" ` +
      `viewBox="0 0 ${size} ${size}">`,
  );
  if (net.empty) {
    parts.push(
      `<text class="empty" x="${size / 2}" y="${size / 2}" text-anchor="middle" ` +
        `font-size="13" fill="#666">${escapeXml(net.message)}</text>`,
    );
    parts.push('</svg>');
    return parts.join('\n');
  }

  // Layout coordinates live in a 400-unit box; rescale for other sizes.
  const k = size / 400;
  const byId = new Map(net.nodes.map((n) => [n.id, n]));
  for (const edge of net.edges) {
    const a = byId.get(edge.a);
    const b = byId.get(edge.b);
    if (!a || !b) continue;
    parts.push(
      `<line class="tie" data-pair="${escapeXml(edge.a)}|${escapeXml(edge.b)}" ` +
        `x1="${fmt(a.x * k)}" y1="${fmt(a.y * k)}" x2="${fmt(b.x * k)}" y2="${fmt(b.y * k)}" ` +
        `stroke="#999" stroke-width="${fmt(edge.width)}" opacity="0.6">` +
        (edge.summary ? `<title>${escapeXml(edge.summary)}</title>` : '') +
        `</line>`,
    );
  }
  for (const node of net.nodes) {
    const r = node.radius * k;
    parts.push(
      `<circle class="cast" data-entity="${escapeXml(node.id)}" cx="${fmt(node.x * k)}" ` +
        `cy="${fmt(node.y * k)}" r="${fmt(r)}" fill="${node.color}">` +
        `<title>${escapeXml(node.name)}</title></circle>`,
    );
    parts.push(
      `<text class="cast-label" x="${fmt(node.x * k)}" y="${fmt(node.y * k - r - 4)}" ` +
        `text-anchor="middle" font-size="10">${escapeXml(node.name)}</text>`,
    );
  }
  parts.push('</svg>');
  return parts.join('\n');
}
