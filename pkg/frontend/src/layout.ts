/**
 * Ribbon layout: turns a story plus a ViewState into per-entity weighted
 * paths. Pure geometry, no DOM; the renderer and the tests both consume the
 * same output.
 *
 * Core rules:
 * - the x axis is segmented by chapter or by scene, equal widths unless
 *   scale_by_length weights them by line count;
 * - an entity's ribbon breaks wherever it is absent (gap rule) and contiguous
 *   presence is joined with cubic curves whose tangents are horizontal at the
 *   anchors, so ribbons never overshoot across lanes;
 * - thickness is a clamped, strictly increasing function of importance.
 */

import type { Scene, StoryData, TraitRanking, ViewState } from './types.js';
import { entityPool, sceneCounts, visibleEntities, type EntityRef } from './state.js';
import { ribbonColor } from './colors.js';

export interface TimeStep {
  /** "c2" in chapter mode, "c2s5" in scene mode. */
  key: string;
  chapterIndex: number;
  sceneIndex: number | null;
  x: number;
  width: number;
  lineCount: number;
  label: string;
}

export interface RibbonAnchor {
  x: number;
  y: number;
  thickness: number;
  stepIndex: number;
  sentiment: number;
}

/** One cubic piece between two anchors; c1y/c2y equal the anchor ys. */
export interface CubicSegment {
  x0: number;
  y0: number;
  c1x: number;
  c1y: number;
  c2x: number;
  c2y: number;
  x1: number;
  y1: number;
}

export interface RibbonSegment {
  anchors: RibbonAnchor[];
  curves: CubicSegment[];
}

export interface Ribbon {
  entityId: string;
  name: string;
  color: string;
  segments: RibbonSegment[];
}

export interface RibbonLayout {
  width: number;
  height: number;
  steps: TimeStep[];
  ribbons: Ribbon[];
}

export interface LayoutOptions {
  width?: number;
  height?: number;
  minThickness?: number;
  maxThickness?: number;
  /** Required when view.y_mode is custom_trait. */
  traitRanking?: TraitRanking;
  /** Per-entity importance in [0, 1]; defaults to scene-count share. */
  importanceOf?: (entityId: string, step: TimeStep) => number;
  /** Required when view.ribbon_color_mode is custom_attribute. */
  categorization?: import('./types').ColorCategorization;
}

const CURVE_PULL = 0.4; // fraction of the x gap given to each control point

/** Group maximal runs of consecutive step indices; the gap rule. */
export function presenceSegments(stepIndices: number[]): number[][] {
  const sorted = [...stepIndices].sort((a, b) => a - b);
  const runs: number[][] = [];
  for (const idx of sorted) {
    const current = runs[runs.length - 1];
    if (current && idx === current[current.length - 1]! + 1) {
      current.push(idx);
    } else {
      runs.push([idx]);
    }
  }
  return runs;
}

/** Clamped linear map from importance to stroke thickness; strictly increasing on [0, 1]. */
export function thicknessFor(importance: number, minThickness = 2, maxThickness = 16): number {
  const t = Math.min(Math.max(importance, 0), 1);
  return minThickness + t * (maxThickness - minThickness);
}

/** Linear map of sentiment in [-1, 1] to a y coordinate; -1 is the bottom of the plot. */
export function yForSentiment(sentiment: number, height: number): number {
  const s = Math.min(Math.max(sentiment, -1), 1);
  return height - ((s + 1) / 2) * height;
}

function laneY(lane: number, laneCount: number, height: number): number {
  return ((lane + 0.5) / Math.max(laneCount, 1)) * height;
}

export function buildSteps(
  story: StoryData,
  xMode: ViewState['x_mode'],
  scaleByLength: boolean,
  plotWidth: number,
): TimeStep[] {
  const units =
    xMode === 'chapter'
      ? story.chapters.map((c) => ({
          key: `c${c.index}`,
          chapterIndex: c.index,
          sceneIndex: null as number | null,
          lineCount: c.line_end - c.line_start,
          label: c.title,
        }))
      : story.scenes.map((s) => ({
          key: `c${s.chapter_index}s${s.scene_index}`,
          chapterIndex: s.chapter_index,
          sceneIndex: s.scene_index as number | null,
          lineCount: s.line_end - s.line_start,
          label: s.title,
        }));
  if (!units.length) return [];
  const totalLines = units.reduce((acc, u) => acc + u.lineCount, 0) || 1;
  let cursor = 0;
  return units.map((u) => {
    const width = scaleByLength
      ? (u.lineCount / totalLines) * plotWidth
      : plotWidth / units.length;
    const step: TimeStep = { ...u, x: cursor + width / 2, width };
    cursor += width;
    return step;
  });
}

interface Presence {
  sentiment: number;
  scene: Scene; // representative scene (the first one, in chapter mode)
}

/** stepIndex -> presence, for one entity. */
function presenceByStep(
  story: StoryData,
  steps: TimeStep[],
  kind: 'character' | 'theme',
  entityId: string,
): Map<number, Presence> {
  const out = new Map<number, Presence>();
  const sceneStep = new Map<string, number>();
  steps.forEach((step, i) => {
    if (step.sceneIndex === null) return;
    sceneStep.set(step.key, i);
  });
  const chapterStep = new Map<number, number>();
  steps.forEach((step, i) => {
    if (step.sceneIndex === null) chapterStep.set(step.chapterIndex, i);
  });

  const sentiments = new Map<number, number[]>();
  for (const scene of story.scenes) {
    const app = scene.appearances.find((a) => a.kind === kind && a.entity_id === entityId);
    if (!app) continue;
    const stepIndex =
      sceneStep.get(`c${scene.chapter_index}s${scene.scene_index}`) ??
      chapterStep.get(scene.chapter_index);
    if (stepIndex === undefined) continue;
    if (!out.has(stepIndex)) out.set(stepIndex, { sentiment: app.sentiment, scene });
    const bucket = sentiments.get(stepIndex) ?? [];
    bucket.push(app.sentiment);
    sentiments.set(stepIndex, bucket);
  }
  // Chapter steps aggregate sentiment as the mean over the chapter's scenes.
  for (const [stepIndex, values] of sentiments) {
    const presence = out.get(stepIndex)!;
    presence.sentiment = values.reduce((a, b) => a + b, 0) / values.length;
  }
  return out;
}

/** Locations in order of first chronological appearance; lane per location id. */
function locationLanes(story: StoryData): Map<string, number> {
  const ordered = [...story.locations].sort(
    (a, b) =>
      a.first_appearance[0] - b.first_appearance[0] ||
      a.first_appearance[1] - b.first_appearance[1],
  );
  return new Map(ordered.map((loc, i) => [loc.entity_id, i]));
}

/**
 * Fixed lane per entity for the character y_mode: cast members grouped by
 * group_id (groups in story order, members in cast order), themes in list
 * order. Lanes cover the whole pool so hiding an entity never reshuffles.
 */
function entityLanes(story: StoryData, state: ViewState): Map<string, number> {
  const pool = entityPool(story, state.entity_kind);
  if (state.entity_kind === 'themes') {
    return new Map(pool.map((e, i) => [e.id, i]));
  }
  const byGroup = new Map<string, EntityRef[]>();
  for (const e of pool) {
    const key = e.groupId ?? '';
    byGroup.set(key, [...(byGroup.get(key) ?? []), e]);
  }
  const orderedGroups = story.groups.map((g) => g.group_id).filter((id) => byGroup.has(id));
  const leftover = [...byGroup.keys()].filter((id) => !orderedGroups.includes(id));
  const lanes = new Map<string, number>();
  let lane = 0;
  for (const groupId of [...orderedGroups, ...leftover]) {
    for (const e of byGroup.get(groupId)!) lanes.set(e.id, lane++);
  }
  return lanes;
}

function rankingLookup(ranking: TraitRanking): Map<string, string[]> {
  const out = new Map<string, string[]>();
  for (const entry of ranking.per_scene) {
    out.set(
      `c${entry.chapter_index}s${entry.scene_index}`,
      entry.ranked.map((r) => r.entity_id),
    );
  }
  return out;
}

function curvesThrough(anchors: RibbonAnchor[]): CubicSegment[] {
  const curves: CubicSegment[] = [];
  for (let i = 0; i + 1 < anchors.length; i++) {
    const a = anchors[i]!;
    const b = anchors[i + 1]!;
    const pull = (b.x - a.x) * CURVE_PULL;
    curves.push({
      x0: a.x,
      y0: a.y,
      c1x: a.x + pull,
      c1y: a.y,
      c2x: b.x - pull,
      c2y: b.y,
      x1: b.x,
      y1: b.y,
    });
  }
  return curves;
}

export function layoutRibbons(
  story: StoryData,
  state: ViewState,
  options: LayoutOptions = {},
): RibbonLayout {
  const width = options.width ?? 1000;
  const height = options.height ?? 600;
  const minT = options.minThickness ?? 2;
  const maxT = options.maxThickness ?? 16;

  if (state.y_mode === 'custom_trait' && !options.traitRanking) {
    throw new Error('custom_trait y_mode requires a loaded trait ranking');
  }
  if (state.ribbon_color_mode === 'custom_attribute' && !options.categorization) {
    throw new Error('custom_attribute color mode requires a loaded categorization');
  }

  const steps = buildSteps(story, state.x_mode, state.scale_by_length, width);
  const kind = state.entity_kind === 'characters' ? 'character' : 'theme';
  const visible = visibleEntities(story, state);

  const counts = sceneCounts(story, state.entity_kind);
  const maxCount = Math.max(1, ...counts.values());
  const importanceOf =
    options.importanceOf ?? ((entityId: string) => (counts.get(entityId) ?? 0) / maxCount);

  const locLanes = locationLanes(story);
  const charLanes = entityLanes(story, state);
  const ranking = options.traitRanking ? rankingLookup(options.traitRanking) : null;

  const presence = new Map<string, Map<number, Presence>>();
  for (const e of visible) {
    presence.set(e.id, presenceByStep(story, steps, kind, e.id));
  }
  const firstStep = (entityId: string) => Math.min(...(presence.get(entityId)?.keys() ?? []), Infinity);

  // Importance mode ranks the entities present at each step, highest first,
  // ties broken by earlier first appearance.
  const ranksPerStep = new Map<number, Map<string, { rank: number; of: number }>>();
  if (state.y_mode === 'importance') {
    steps.forEach((step, stepIndex) => {
      const present = visible.filter((e) => presence.get(e.id)!.has(stepIndex));
      const ordered = [...present].sort(
        (a, b) =>
          importanceOf(b.id, step) - importanceOf(a.id, step) || firstStep(a.id) - firstStep(b.id),
      );
      ranksPerStep.set(
        stepIndex,
        new Map(ordered.map((e, rank) => [e.id, { rank, of: ordered.length }])),
      );
    });
  }

  const yFor = (entity: EntityRef, stepIndex: number, p: Presence): number | null => {
    const step = steps[stepIndex]!;
    switch (state.y_mode) {
      case 'location': {
        const lane = locLanes.get(p.scene.location_id);
        return laneY(lane ?? locLanes.size, Math.max(locLanes.size, 1), height);
      }
      case 'character':
        return laneY(charLanes.get(entity.id) ?? 0, Math.max(charLanes.size, 1), height);
      case 'importance': {
        const slot = ranksPerStep.get(stepIndex)?.get(entity.id);
        if (!slot) return null;
        return laneY(slot.rank, slot.of, height);
      }
      case 'sentiment':
        return yForSentiment(p.sentiment, height);
      case 'custom_trait': {
        // Rankings are per scene; a chapter step uses its representative scene.
        const sceneKey = `c${p.scene.chapter_index}s${p.scene.scene_index}`;
        const order = ranking!.get(sceneKey);
        if (!order) return null;
        const lane = order.indexOf(entity.id);
        if (lane < 0) return null;
        return laneY(lane, order.length, height);
      }
    }
  };

  const ribbons: Ribbon[] = visible.map((entity) => {
    const byStep = presence.get(entity.id)!;
    const segments: RibbonSegment[] = [];
    for (const run of presenceSegments([...byStep.keys()])) {
      const anchors: RibbonAnchor[] = [];
      for (const stepIndex of run) {
        const p = byStep.get(stepIndex)!;
        const y = yFor(entity, stepIndex, p);
        if (y === null) continue;
        const step = steps[stepIndex]!;
        anchors.push({
          x: step.x,
          y,
          thickness: thicknessFor(importanceOf(entity.id, step), minT, maxT),
          stepIndex,
          sentiment: p.sentiment,
        });
      }
      if (anchors.length) segments.push({ anchors, curves: curvesThrough(anchors) });
    }
    return {
      entityId: entity.id,
      name: entity.name,
      color: ribbonColor(story, state, entity, {
        categorization: options.categorization,
        importance: importanceOf(entity.id, steps[0] ?? ({} as TimeStep)),
      }),
      segments,
    };
  });

  return { width, height, steps, ribbons };
}
