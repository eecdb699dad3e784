import { describe, expect, it } from 'vitest';

import { renderNetwork, renderOverview } from '../src/render';
import { defaultViewState, visibleEntities } from '../src/state';
import { chapterNetwork, sceneHover } from '../src/views';
import { loadChapterText, loadSampleStory } from './helpers';
import { makeStory, type SceneSpec } from './helpers';

function ribbonEntities(svg: string): string[] {
  return [...svg.matchAll(/class="ribbon" data-entity="([^"]+)"/g)].map((m) => m[1]!);
}

describe('rendered overview', () => {
  it('shows one ribbon per top-30 entity for the bundled story', () => {
    const story = loadSampleStory();
    const state = defaultViewState(story.meta.id);
    const svg = renderOverview(story, state);
    const entities = ribbonEntities(svg);
    const expected = visibleEntities(story, state).map((e) => e.id);
    expect(entities).toEqual(expected);
    expect(new Set(entities).size).toBe(entities.length);
    expect(entities.length).toBe(Math.min(story.characters.length, 30));
  });

  it('shows one ribbon per theme in theme view', () => {
    const story = loadSampleStory();
    const state = { ...defaultViewState(story.meta.id), entity_kind: 'themes' as const };
    expect(ribbonEntities(renderOverview(story, state)).length).toBe(story.themes.length);
  });

  it('caps a large cast at 30 ribbons unless show_all', () => {
    const ids = Array.from({ length: 35 }, (_, i) => `e${i}`);
    const scenes: SceneSpec[] = Array.from({ length: 35 }, (_, sceneIdx) => ({
      chapter: 0,
      cast: ids.filter((_, entityIdx) => entityIdx >= 34 - sceneIdx).map((id) => ({ id })),
    }));
    const story = makeStory(ids, scenes);
    const state = defaultViewState('synthetic');
    expect(ribbonEntities(renderOverview(story, state)).length).toBe(30);
    expect(ribbonEntities(renderOverview(story, { ...state, show_all: true })).length).toBe(35);
  });

  it('labels every step, in both x modes', () => {
    const story = loadSampleStory();
    const state = defaultViewState(story.meta.id);
    const sceneLabels = (renderOverview(story, state).match(/class="step-label"/g) ?? []).length;
    expect(sceneLabels).toBe(story.scenes.length);
    const chapterLabels = (
      renderOverview(story, { ...state, x_mode: 'chapter' }).match(/class="step-label"/g) ?? []
    ).length;
    expect(chapterLabels).toBe(story.chapters.length);
  });

  it('dims non-highlighted ribbons when a highlight is active', () => {
    const story = loadSampleStory();
    const state = { ...defaultViewState(story.meta.id), highlighted: ['tobias-vann'] };
    const svg = renderOverview(story, state);
    const dimmed = (svg.match(/opacity="0.15"/g) ?? []).length;
    expect(dimmed).toBe(story.characters.length - 1);
  });
});

describe('quote passthrough', () => {
  it('keeps every quote verbatim from its chapter text, no truncation', () => {
    const story = loadSampleStory();
    const chapterTexts = new Map(story.chapters.map((c) => [c.index, loadChapterText(c.index)]));
    let quotes = 0;
    for (const scene of story.scenes) {
      const hover = sceneHover(story, scene);
      for (const row of [...hover.characters, ...hover.themes]) {
        if (row.evidence.variant !== 'quote') continue;
        quotes += 1;
        expect(row.quoted).toBe(true);
        expect(row.badge).toBe('verified quote');
        expect(chapterTexts.get(scene.chapter_index)!).toContain(row.evidence.text);
        expect(row.evidence.text).not.toContain('…');
      }
    }
    expect(quotes).toBeGreaterThan(0);
  });
});

describe('rendered chapter network', () => {
  it('draws one circle per cast member and one line per co-occurring pair', () => {
    const story = loadSampleStory();
    const net = chapterNetwork(story, 0);
    const svg = renderNetwork(net);
    expect((svg.match(/class="cast"/g) ?? []).length).toBe(net.nodes.length);
    expect((svg.match(/class="tie"/g) ?? []).length).toBe(net.edges.length);
    expect(net.nodes.length).toBeGreaterThan(0);
  });

  it('renders the empty-state message for a castless chapter', () => {
    const story = makeStory(
      ['solo'],
      [{ chapter: 0, cast: [{ id: 'solo' }] }, { chapter: 1, cast: [] }],
    );
    const svg = renderNetwork(chapterNetwork(story, 1));
    expect(svg).toContain('No characters appear in this chapter.');
    expect(svg).not.toContain('class="cast"');
  });

  it('scales positions into the requested viewport', () => {
    const story = loadSampleStory();
    const net = chapterNetwork(story, 0);
    const svg = renderNetwork(net, 200);
    expect(svg).toContain('viewBox="0 0 200 200"');
    for (const m of svg.matchAll(/c[xy]="([\d.]+)"/g)) {
      const v = Number(m[1]);
      expect(v).toBeGreaterThanOrEqual(0);
      expect(v).toBeLessThanOrEqual(200);
    }
  });
});
