/**
 * View state: defaults, URL-hash round-tripping, and entity visibility.
 *
 * Everything on screen must be reconstructable from (story.json, ViewState,
 * cached on-the-fly results), so the hash carries the full ViewState and
 * nothing else.
 */

import type {
  EntityScope,
  LabelEncoding,
  RibbonColorMode,
  StoryData,
  ViewState,
  XMode,
  YMode,
} from './types.js';

/** Cap on simultaneously visible ribbons unless show_all is set. */
export const MAX_VISIBLE_RIBBONS = 30;

const X_MODES: XMode[] = ['chapter', 'scene'];
const Y_MODES: YMode[] = ['location', 'character', 'importance', 'sentiment', 'custom_trait'];
const COLOR_MODES: RibbonColorMode[] = [
  'llm_assigned',
  'group',
  'importance',
  'sentiment',
  'custom_attribute',
];
const ENTITY_SCOPES: EntityScope[] = ['characters', 'themes'];
const LABEL_ENCODINGS: LabelEncoding[] = [
  'importance',
  'sentiment',
  'conflict',
  'length',
  'num_characters',
];

export function defaultViewState(storyId: string): ViewState {
  return {
    story_id: storyId,
    x_mode: 'scene',
    y_mode: 'location',
    ribbon_color_mode: 'llm_assigned',
    entity_kind: 'characters',
    label_encoding: 'importance',
    scale_by_length: false,
    show_all: false,
    highlighted: [],
    hidden: [],
    trait: '',
    attribute: '',
  };
}

function pick<T extends string>(value: string | null, allowed: T[], fallback: T): T {
  return allowed.includes(value as T) ? (value as T) : fallback;
}

/** Serialize a ViewState into a shareable URL hash (without the leading '#'). */
export function encodeViewState(state: ViewState): string {
  const params = new URLSearchParams();
  params.set('story', state.story_id);
  params.set('x', state.x_mode);
  params.set('y', state.y_mode);
  params.set('color', state.ribbon_color_mode);
  params.set('kind', state.entity_kind);
  params.set('labels', state.label_encoding);
  if (state.scale_by_length) params.set('scale', '1');
  if (state.show_all) params.set('all', '1');
  if (state.highlighted.length) params.set('hl', state.highlighted.join(','));
  if (state.hidden.length) params.set('hide', state.hidden.join(','));
  if (state.trait) params.set('trait', state.trait);
  if (state.attribute) params.set('attr', state.attribute);
  return params.toString();
}

/** Parse a URL hash back into a ViewState; unknown or junk values fall back to defaults. */
export function decodeViewState(hash: string, fallbackStoryId = ''): ViewState {
  const params = new URLSearchParams(hash.replace(/^#/, ''));
  const base = defaultViewState(params.get('story') || fallbackStoryId);
  const list = (key: string) =>
    (params.get(key) || '')
      .split(',')
      .map((s) => s.trim())
      .filter(Boolean);
  return {
    ...base,
    x_mode: pick(params.get('x'), X_MODES, base.x_mode),
    y_mode: pick(params.get('y'), Y_MODES, base.y_mode),
    ribbon_color_mode: pick(params.get('color'), COLOR_MODES, base.ribbon_color_mode),
    entity_kind: pick(params.get('kind'), ENTITY_SCOPES, base.entity_kind),
    label_encoding: pick(params.get('labels'), LABEL_ENCODINGS, base.label_encoding),
    scale_by_length: params.get('scale') === '1',
    show_all: params.get('all') === '1',
    highlighted: list('hl'),
    hidden: list('hide'),
    trait: params.get('trait') || '',
    attribute: params.get('attr') || '',
  };
}

export interface EntityRef {
  id: string;
  name: string;
  color: string;
  groupId: string | null;
}

/** The full cast (or theme list) in story order, before any visibility filtering. */
export function entityPool(story: StoryData, kind: EntityScope): EntityRef[] {
  if (kind === 'characters') {
    return story.characters.map((c) => ({
      id: c.entity_id,
      name: c.canonical_name,
      color: c.color,
      groupId: c.group_id,
    }));
  }
  return story.themes.map((t) => ({
    id: t.entity_id,
    name: t.name,
    color: t.color,
    groupId: null,
  }));
}

/** Count of scenes an entity appears in; the default importance signal. */
export function sceneCounts(story: StoryData, kind: EntityScope): Map<string, number> {
  const wanted = kind === 'characters' ? 'character' : 'theme';
  const counts = new Map<string, number>();
  for (const scene of story.scenes) {
    for (const app of scene.appearances) {
      if (app.kind === wanted) {
        counts.set(app.entity_id, (counts.get(app.entity_id) ?? 0) + 1);
      }
    }
  }
  return counts;
}

/**
 * Entities that should currently be drawn, in pool order: hidden ones are
 * dropped, then everything outside the top MAX_VISIBLE_RIBBONS by scene count
 * unless show_all is set. Ties keep pool order.
 */
export function visibleEntities(story: StoryData, state: ViewState): EntityRef[] {
  const hidden = new Set(state.hidden);
  const pool = entityPool(story, state.entity_kind).filter((e) => !hidden.has(e.id));
  if (state.show_all || pool.length <= MAX_VISIBLE_RIBBONS) return pool;
  const counts = sceneCounts(story, state.entity_kind);
  const ranked = pool
    .map((e, order) => ({ e, order, count: counts.get(e.id) ?? 0 }))
    .sort((p, q) => q.count - p.count || p.order - q.order)
    .slice(0, MAX_VISIBLE_RIBBONS);
  const keep = new Set(ranked.map((r) => r.e.id));
  return pool.filter((e) => keep.has(e.id));
}
