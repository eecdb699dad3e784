import { readFileSync } from 'node:fs';
import path from 'node:path';
import { fileURLToPath } from 'node:url';

import type { Evidence, Ratings, Scene, StoryData } from '../src/types';

const here = path.dirname(fileURLToPath(import.meta.url));
export const REPO_ROOT = path.resolve(here, '..', '..');
export const SAMPLE_ID = 'metamorphosis-sample';

export function loadSampleStory(): StoryData {
  const file = path.join(REPO_ROOT, 'data', SAMPLE_ID, 'story.json');
  return JSON.parse(readFileSync(file, 'utf-8')) as StoryData;
}

export function loadChapterText(chapterIndex: number): string {
  const file = path.join(REPO_ROOT, 'data', SAMPLE_ID, 'chapters', `${chapterIndex}.txt`);
  return readFileSync(file, 'utf-8');
}

const EXPLANATION: Evidence = { variant: 'explanation', text: 'present here', verified: false };
const RATINGS: Ratings = { importance: 0.5, conflict: 0.2, sentiment: 0 };

export interface SceneSpec {
  chapter: number;
  location?: string;
  cast?: { id: string; sentiment?: number }[];
  themes?: string[];
  lines?: number;
  ratings?: Partial<Ratings>;
}

/** Minimal consistent StoryData for layout tests; scenes stack per chapter. */
export function makeStory(characterIds: string[], sceneSpecs: SceneSpec[]): StoryData {
  const scenes: Scene[] = [];
  const perChapter = new Map<number, number>();
  const locationOrder: string[] = [];
  const locationFirst = new Map<string, [number, number]>();
  const themeIds = new Set<string>();

  for (const spec of sceneSpecs) {
    const sceneIndex = perChapter.get(spec.chapter) ?? 0;
    perChapter.set(spec.chapter, sceneIndex + 1);
    const location = spec.location ?? 'somewhere';
    if (!locationFirst.has(location)) {
      locationFirst.set(location, [spec.chapter, sceneIndex]);
      locationOrder.push(location);
    }
    const lines = spec.lines ?? 10;
    const prior = scenes.filter((s) => s.chapter_index === spec.chapter);
    const lineStart = prior.reduce((acc, s) => Math.max(acc, s.line_end), 0);
    for (const t of spec.themes ?? []) themeIds.add(t);
    scenes.push({
      chapter_index: spec.chapter,
      scene_index: sceneIndex,
      title: `Scene ${spec.chapter}.${sceneIndex}`,
      summary: 'things happen',
      location_id: location,
      boundary_explanation: sceneIndex === 0 ? '' : 'the scene moves on',
      line_start: lineStart,
      line_end: lineStart + lines,
      ratings: { ...RATINGS, ...spec.ratings },
      appearances: [
        ...(spec.cast ?? []).map((c) => ({
          entity_id: c.id,
          kind: 'character' as const,
          sentiment: c.sentiment ?? 0,
          emotion: 'steady',
          evidence: EXPLANATION,
        })),
        ...(spec.themes ?? []).map((t) => ({
          entity_id: t,
          kind: 'theme' as const,
          sentiment: 0,
          emotion: 'n/a',
          evidence: EXPLANATION,
        })),
      ],
    });
  }

  const chapterIndices = [...new Set(sceneSpecs.map((s) => s.chapter))].sort((a, b) => a - b);
  let offset = 0;
  const chapters = chapterIndices.map((index) => {
    const lineCount = scenes
      .filter((s) => s.chapter_index === index)
      .reduce((acc, s) => Math.max(acc, s.line_end), 0);
    const chapter = { index, title: `Ch ${index}`, line_start: offset, line_end: offset + lineCount };
    offset += lineCount;
    return chapter;
  });

  return {
    schema_version: 1,
    meta: {
      id: 'synthetic',
      title: 'Synthetic',
      author: 'Tests',
      genre: 'novel',
      source: 'raw.txt',
      line_count: offset,
    },
    chapters,
    chapter_summaries: chapters.map((c) => ({
      chapter_index: c.index,
      summary: `Chapter ${c.index} in brief.`,
      ratings: { ...RATINGS },
      length_norm: 1,
      character_counts: {},
      location_counts: {},
      interactions: [],
    })),
    scenes,
    characters: characterIds.map((id, i) => ({
      entity_id: id,
      canonical_name: id.toUpperCase(),
      aliases: [],
      group_id: `g${i % 2}`,
      color: '#112233',
      color_explanation: '',
      representative_quote: EXPLANATION,
    })),
    groups: [
      { group_id: 'g0', label: 'Group Zero' },
      { group_id: 'g1', label: 'Group One' },
    ],
    locations: locationOrder.map((id) => ({
      entity_id: id,
      canonical_name: id,
      aliases: [],
      first_appearance: locationFirst.get(id)!,
      representative_quote: EXPLANATION,
    })),
    themes: [...themeIds].map((id) => ({ entity_id: id, name: id, color: '#445566' })),
  };
}
