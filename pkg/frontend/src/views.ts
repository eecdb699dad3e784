/**
 * View models for the Detail Overlay, scene hover popup, chapter text
 * minimap, and settings sidebar. All plain data, renderable headlessly; the
 * DOM layer (or a test) consumes these structures directly.
 */

import type { ChapterSummary, Evidence, Scene, StoryData, ViewState } from './types.js';
import { entityPool, sceneCounts } from './state.js';

// ---------------------------------------------------------------------------
// Chapter network
// ---------------------------------------------------------------------------

export interface NetworkNode {
  id: string;
  name: string;
  color: string;
  /** Scene-appearance count within the covered chapters. */
  count: number;
  radius: number;
  x: number;
  y: number;
}

export interface NetworkEdge {
  a: string;
  b: string;
  /** Number of scenes the pair co-occurs in. */
  count: number;
  width: number;
  /** Interaction summary for hover; empty when none was extracted. */
  summary: string;
}

export interface ChapterNetwork {
  nodes: NetworkNode[];
  edges: NetworkEdge[];
  empty: boolean;
  message: string;
}

const NODE_RADIUS = { min: 6, max: 22 };
const EDGE_WIDTH = { min: 1, max: 8 };

function pairKey(a: string, b: string): string {
  return a < b ? `${a}|${b}` : `${b}|${a}`;
}

/**
 * Small deterministic force relaxation: nodes start on a circle in cast
 * order, springs pull co-occurring pairs together, all pairs repel. Fixed
 * iteration count, no randomness, so layouts are reproducible.
 */
function relax(nodes: NetworkNode[], edges: NetworkEdge[], size = 400): void {
  const n = nodes.length;
  if (!n) return;
  nodes.forEach((node, i) => {
    const angle = (2 * Math.PI * i) / n;
    node.x = size / 2 + (size / 3) * Math.cos(angle);
    node.y = size / 2 + (size / 3) * Math.sin(angle);
  });
  const index = new Map(nodes.map((node, i) => [node.id, i]));
  for (let iter = 0; iter < 60; iter++) {
    const fx = new Array<number>(n).fill(0);
    const fy = new Array<number>(n).fill(0);
    for (let i = 0; i < n; i++) {
      for (let j = i + 1; j < n; j++) {
        const dx = nodes[j]!.x - nodes[i]!.x;
        const dy = nodes[j]!.y - nodes[i]!.y;
        const d2 = Math.max(dx * dx + dy * dy, 1);
        const push = 1800 / d2;
        const d = Math.sqrt(d2);
        fx[i]! -= (dx / d) * push;
        fy[i]! -= (dy / d) * push;
        fx[j]! += (dx / d) * push;
        fy[j]! += (dy / d) * push;
      }
    }
    for (const edge of edges) {
      const i = index.get(edge.a)!;
      const j = index.get(edge.b)!;
      const dx = nodes[j]!.x - nodes[i]!.x;
      const dy = nodes[j]!.y - nodes[i]!.y;
      const pull = 0.02 * edge.count;
      fx[i]! += dx * pull;
      fy[i]! += dy * pull;
      fx[j]! -= dx * pull;
      fy[j]! -= dy * pull;
    }
    for (let i = 0; i < n; i++) {
      nodes[i]!.x = Math.min(Math.max(nodes[i]!.x + fx[i]!, 0), size);
      nodes[i]!.y = Math.min(Math.max(nodes[i]!.y + fy[i]!, 0), size);
    }
  }
}

/**
 * Character co-occurrence network for one chapter; cumulative=true aggregates
 * chapters 0..chapterIndex so the final chapter shows the whole story.
 */
export function chapterNetwork(
  story: StoryData,
  chapterIndex: number,
  cumulative = false,
): ChapterNetwork {
  const covered = (ci: number) => (cumulative ? ci <= chapterIndex : ci === chapterIndex);
  const counts = new Map<string, number>();
  const pairs = new Map<string, number>();
  for (const scene of story.scenes) {
    if (!covered(scene.chapter_index)) continue;
    const cast = scene.appearances.filter((a) => a.kind === 'character').map((a) => a.entity_id);
    for (const id of cast) counts.set(id, (counts.get(id) ?? 0) + 1);
    for (let i = 0; i < cast.length; i++) {
      for (let j = i + 1; j < cast.length; j++) {
        const key = pairKey(cast[i]!, cast[j]!);
        pairs.set(key, (pairs.get(key) ?? 0) + 1);
      }
    }
  }

  if (!counts.size) {
    return { nodes: [], edges: [], empty: true, message: 'No characters appear in this chapter.' };
  }

  const summaries = new Map<string, string>();
  for (const cs of story.chapter_summaries) {
    if (!covered(cs.chapter_index)) continue;
    for (const it of cs.interactions) summaries.set(pairKey(it.a, it.b), it.summary);
  }

  const maxCount = Math.max(...counts.values());
  const nodes: NetworkNode[] = story.characters
    .filter((c) => counts.has(c.entity_id))
    .map((c) => ({
      id: c.entity_id,
      name: c.canonical_name,
      color: c.color,
      count: counts.get(c.entity_id)!,
      radius:
        NODE_RADIUS.min +
        (NODE_RADIUS.max - NODE_RADIUS.min) * (counts.get(c.entity_id)! / maxCount),
      x: 0,
      y: 0,
    }));

  const maxPair = Math.max(...pairs.values(), 1);
  const edges: NetworkEdge[] = [...pairs.entries()]
    .sort(([a], [b]) => (a < b ? -1 : 1))
    .map(([key, count]) => {
      const [a, b] = key.split('|') as [string, string];
      return {
        a,
        b,
        count,
        width: EDGE_WIDTH.min + (EDGE_WIDTH.max - EDGE_WIDTH.min) * (count / maxPair),
        summary: summaries.get(key) ?? '',
      };
    });

  relax(nodes, edges);
  return { nodes, edges, empty: false, message: '' };
}

// ---------------------------------------------------------------------------
// Detail overlay
// ---------------------------------------------------------------------------

export interface RatingBar {
  label: 'importance' | 'conflict' | 'sentiment';
  value: number;
  /** Sentiment spans [-1, 1]; the others [0, 1]. */
  signed: boolean;
}

export interface LocationBar {
  locationId: string;
  name: string;
  count: number;
}

export interface DetailOverlay {
  chapterIndex: number;
  title: string;
  summary: string;
  ratings: RatingBar[];
  network: ChapterNetwork;
  locations: LocationBar[];
  scenes: Scene[];
}

export function detailOverlay(
  story: StoryData,
  chapterIndex: number,
  cumulative = false,
): DetailOverlay {
  const chapter = story.chapters.find((c) => c.index === chapterIndex);
  const summary: ChapterSummary | undefined = story.chapter_summaries.find(
    (s) => s.chapter_index === chapterIndex,
  );
  const names = new Map(story.locations.map((l) => [l.entity_id, l.canonical_name]));
  const locations = Object.entries(summary?.location_counts ?? {})
    .map(([locationId, count]) => ({
      locationId,
      name: names.get(locationId) ?? locationId,
      count,
    }))
    .sort((p, q) => q.count - p.count || (p.locationId < q.locationId ? -1 : 1));
  return {
    chapterIndex,
    title: chapter?.title ?? '',
    summary: summary?.summary ?? '',
    ratings: [
      { label: 'importance', value: summary?.ratings.importance ?? 0, signed: false },
      { label: 'conflict', value: summary?.ratings.conflict ?? 0, signed: false },
      { label: 'sentiment', value: summary?.ratings.sentiment ?? 0, signed: true },
    ],
    network: chapterNetwork(story, chapterIndex, cumulative),
    locations,
    scenes: story.scenes.filter((s) => s.chapter_index === chapterIndex),
  };
}

// ---------------------------------------------------------------------------
// Scene hover popup
// ---------------------------------------------------------------------------

export interface SceneHoverRow {
  entityId: string;
  name: string;
  emotion: string;
  sentiment: number;
  evidence: Evidence;
  /** Quotes are set in quotation marks; explanations are badged instead. */
  badge: 'verified quote' | 'unverified quote' | 'LLM explanation';
  quoted: boolean;
  mostImportant: boolean;
}

export interface SceneHover {
  title: string;
  summary: string;
  locationId: string;
  boundaryExplanation: string;
  characters: SceneHoverRow[];
  themes: SceneHoverRow[];
}

/**
 * Characters in the popup are ranked by importance; with no per-scene score
 * in the data, story-wide appearance share is the ranking signal, ties kept
 * in cast order.
 */
export function sceneHover(story: StoryData, scene: Scene): SceneHover {
  const build = (kind: 'character' | 'theme'): SceneHoverRow[] => {
    const scope = kind === 'character' ? 'characters' : 'themes';
    const pool = entityPool(story, scope);
    const order = new Map(pool.map((e, i) => [e.id, i]));
    const names = new Map(pool.map((e) => [e.id, e.name]));
    const counts = sceneCounts(story, scope);
    const rows = scene.appearances
      .filter((a) => a.kind === kind)
      .sort(
        (p, q) =>
          (counts.get(q.entity_id) ?? 0) - (counts.get(p.entity_id) ?? 0) ||
          (order.get(p.entity_id) ?? 0) - (order.get(q.entity_id) ?? 0),
      )
      .map((a, i) => ({
        entityId: a.entity_id,
        name: names.get(a.entity_id) ?? a.entity_id,
        emotion: a.emotion,
        sentiment: a.sentiment,
        evidence: a.evidence,
        badge:
          a.evidence.variant === 'quote'
            ? a.evidence.verified
              ? ('verified quote' as const)
              : ('unverified quote' as const)
            : ('LLM explanation' as const),
        quoted: a.evidence.variant === 'quote',
        mostImportant: i === 0,
      }));
    return rows;
  };
  return {
    title: scene.title,
    summary: scene.summary,
    locationId: scene.location_id,
    boundaryExplanation: scene.boundary_explanation,
    characters: build('character'),
    themes: build('theme'),
  };
}

// ---------------------------------------------------------------------------
// Chapter text minimap
// ---------------------------------------------------------------------------

export interface MinimapScene {
  sceneIndex: number;
  title: string;
  lineStart: number;
  lineEnd: number;
  boundaryExplanation: string;
}

/** Scene strip next to the chapter text; clicking a scene scrolls to lineStart. */
export function minimap(story: StoryData, chapterIndex: number): MinimapScene[] {
  return story.scenes
    .filter((s) => s.chapter_index === chapterIndex)
    .map((s) => ({
      sceneIndex: s.scene_index,
      title: s.title,
      lineStart: s.line_start,
      lineEnd: s.line_end,
      boundaryExplanation: s.boundary_explanation,
    }));
}

export function scrollTarget(scene: MinimapScene): number {
  return scene.lineStart;
}

// ---------------------------------------------------------------------------
// Settings sidebar legend
// ---------------------------------------------------------------------------

export interface LegendEntry {
  id: string;
  name: string;
  color: string;
  hidden: boolean;
  highlighted: boolean;
  /** Hover popup content. */
  quote: Evidence | null;
  colorExplanation: string;
}

export interface LegendGroup {
  groupId: string;
  label: string;
  entities: LegendEntry[];
}

/** Filterable legend, characters organized into their groups, themes flat. */
export function settingsLegend(story: StoryData, state: ViewState): LegendGroup[] {
  const hidden = new Set(state.hidden);
  const highlighted = new Set(state.highlighted);
  if (state.entity_kind === 'themes') {
    return [
      {
        groupId: '',
        label: 'Themes',
        entities: story.themes.map((t) => ({
          id: t.entity_id,
          name: t.name,
          color: t.color,
          hidden: hidden.has(t.entity_id),
          highlighted: highlighted.has(t.entity_id),
          quote: null,
          colorExplanation: '',
        })),
      },
    ];
  }
  const labels = new Map(story.groups.map((g) => [g.group_id, g.label]));
  const groups = new Map<string, LegendEntry[]>();
  for (const c of story.characters) {
    const entry: LegendEntry = {
      id: c.entity_id,
      name: c.canonical_name,
      color: c.color,
      hidden: hidden.has(c.entity_id),
      highlighted: highlighted.has(c.entity_id),
      quote: c.representative_quote,
      colorExplanation: c.color_explanation,
    };
    groups.set(c.group_id, [...(groups.get(c.group_id) ?? []), entry]);
  }
  const ordered = story.groups.filter((g) => groups.has(g.group_id)).map((g) => g.group_id);
  const leftover = [...groups.keys()].filter((id) => !ordered.includes(id));
  return [...ordered, ...leftover].map((groupId) => ({
    groupId,
    label: labels.get(groupId) ?? groupId,
    entities: groups.get(groupId)!,
  }));
}
