/**
 * Ribbon color modes and the diverging sentiment scale (blues for negative,
 * reds for positive, neutral grey at zero).
 */

import type { ColorCategorization, StoryData, ViewState } from './types.js';
import type { EntityRef } from './state.js';

export const SENTIMENT_NEGATIVE = '#2166ac';
export const SENTIMENT_NEUTRAL = '#f7f7f7';
export const SENTIMENT_POSITIVE = '#b2182b';
export const FALLBACK_COLOR = '#808080';

function hexToRgb(hex: string): [number, number, number] {
  const h = hex.replace('#', '');
  return [
    parseInt(h.slice(0, 2), 16),
    parseInt(h.slice(2, 4), 16),
    parseInt(h.slice(4, 6), 16),
  ];
}

function rgbToHex(rgb: [number, number, number]): string {
  return (
    '#' +
    rgb
      .map((v) =>
        Math.round(Math.min(Math.max(v, 0), 255))
          .toString(16)
          .padStart(2, '0'),
      )
      .join('')
  );
}

function mix(a: string, b: string, t: number): string {
  const ca = hexToRgb(a);
  const cb = hexToRgb(b);
  return rgbToHex([
    ca[0] + (cb[0] - ca[0]) * t,
    ca[1] + (cb[1] - ca[1]) * t,
    ca[2] + (cb[2] - ca[2]) * t,
  ]);
}

/** Map sentiment in [-1, 1] onto the diverging scale; -1 and +1 hit the exact endpoints. */
export function sentimentColor(sentiment: number): string {
  const s = Math.min(Math.max(sentiment, -1), 1);
  if (s <= 0) return mix(SENTIMENT_NEUTRAL, SENTIMENT_NEGATIVE, -s);
  return mix(SENTIMENT_NEUTRAL, SENTIMENT_POSITIVE, s);
}

/** Single-hue ramp for importance in [0, 1]; light for minor, dark for major. */
export function importanceColor(importance: number): string {
  const t = Math.min(Math.max(importance, 0), 1);
  return mix('#deebf7', '#08306b', t);
}

/** Groups carry no color of their own; reuse the first member's assigned color. */
export function groupColors(story: StoryData): Map<string, string> {
  const out = new Map<string, string>();
  for (const c of story.characters) {
    if (!out.has(c.group_id)) out.set(c.group_id, c.color);
  }
  return out;
}

/** Mean sentiment of an entity across all its scene appearances. */
export function meanSentiment(story: StoryData, kind: 'character' | 'theme', entityId: string): number {
  let sum = 0;
  let n = 0;
  for (const scene of story.scenes) {
    for (const app of scene.appearances) {
      if (app.kind === kind && app.entity_id === entityId) {
        sum += app.sentiment;
        n += 1;
      }
    }
  }
  return n ? sum / n : 0;
}

export function ribbonColor(
  story: StoryData,
  state: ViewState,
  entity: EntityRef,
  context: { categorization?: ColorCategorization; importance: number },
): string {
  switch (state.ribbon_color_mode) {
    case 'llm_assigned':
      return entity.color;
    case 'group':
      return (entity.groupId && groupColors(story).get(entity.groupId)) || entity.color;
    case 'importance':
      return importanceColor(context.importance);
    case 'sentiment': {
      const kind = state.entity_kind === 'characters' ? 'character' : 'theme';
      return sentimentColor(meanSentiment(story, kind, entity.id));
    }
    case 'custom_attribute': {
      const assignment = context.categorization?.assignments[entity.id];
      const category = context.categorization?.categories.find(
        (c) => c.label === assignment?.label,
      );
      return category?.color ?? FALLBACK_COLOR;
    }
  }
}
