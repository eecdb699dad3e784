import { describe, expect, it } from 'vitest';

import {
  SENTIMENT_NEGATIVE,
  SENTIMENT_NEUTRAL,
  SENTIMENT_POSITIVE,
  sentimentColor,
} from '../src/colors';
import { defaultViewState } from '../src/state';
import {
  chapterNetwork,
  detailOverlay,
  minimap,
  sceneHover,
  scrollTarget,
  settingsLegend,
} from '../src/views';
import { loadSampleStory, makeStory } from './helpers';

describe('chapter network', () => {
  it('sizes nodes by scene count and edges by co-occurrence, both monotone', () => {
    const story = loadSampleStory();
    const net = chapterNetwork(story, 0);
    const byId = new Map(net.nodes.map((n) => [n.id, n]));
    // tobias-vann appears in 6 scenes of chapter I, everyone else in fewer
    const tobias = byId.get('tobias-vann')!;
    for (const node of net.nodes) {
      if (node.id === 'tobias-vann') continue;
      expect(node.count).toBeLessThan(tobias.count);
      expect(node.radius).toBeLessThan(tobias.radius);
    }
    const sortedByCount = [...net.edges].sort((a, b) => a.count - b.count);
    for (let i = 1; i < sortedByCount.length; i++) {
      const prev = sortedByCount[i - 1]!;
      const cur = sortedByCount[i]!;
      expect(cur.width).toBeGreaterThanOrEqual(prev.width);
      if (cur.count > prev.count) expect(cur.width).toBeGreaterThan(prev.width);
    }
  });

  it('cumulative mode at the last chapter equals the union of all chapters', () => {
    const story = loadSampleStory();
    const last = story.chapters.length - 1;
    const cumulative = chapterNetwork(story, last, true);
    const nodeUnion = new Set<string>();
    const edgeUnion = new Map<string, number>();
    for (const chapter of story.chapters) {
      const net = chapterNetwork(story, chapter.index);
      for (const n of net.nodes) nodeUnion.add(n.id);
      for (const e of net.edges) {
        const key = `${e.a}|${e.b}`;
        edgeUnion.set(key, (edgeUnion.get(key) ?? 0) + e.count);
      }
    }
    expect(new Set(cumulative.nodes.map((n) => n.id))).toEqual(nodeUnion);
    const cumulativeEdges = new Map(cumulative.edges.map((e) => [`${e.a}|${e.b}`, e.count]));
    expect(cumulativeEdges).toEqual(edgeUnion);
  });

  it('passes interaction summaries through to edge hover', () => {
    const story = loadSampleStory();
    const summary = story.chapter_summaries[0]!;
    const net = chapterNetwork(story, 0);
    for (const interaction of summary.interactions) {
      const edge = net.edges.find(
        (e) =>
          (e.a === interaction.a && e.b === interaction.b) ||
          (e.a === interaction.b && e.b === interaction.a),
      );
      expect(edge).toBeDefined();
      expect(edge!.summary).toBe(interaction.summary);
    }
  });

  it('renders an empty-state message for a castless chapter', () => {
    const story = makeStory(['a'], [{ chapter: 0, cast: [], themes: ['silence'] }]);
    const net = chapterNetwork(story, 0);
    expect(net.empty).toBe(true);
    expect(net.nodes).toEqual([]);
    expect(net.message).toMatch(/No characters/);
  });

  it('keeps node positions deterministic', () => {
    const story = loadSampleStory();
    const a = chapterNetwork(story, 1);
    const b = chapterNetwork(story, 1);
    expect(a.nodes.map((n) => [n.x, n.y])).toEqual(b.nodes.map((n) => [n.x, n.y]));
  });
});

describe('detail overlay', () => {
  it('collects summary, ratings bars, and the location bar chart', () => {
    const story = loadSampleStory();
    const overlay = detailOverlay(story, 0);
    const summary = story.chapter_summaries[0]!;
    expect(overlay.summary).toBe(summary.summary);
    expect(overlay.ratings.map((r) => r.label)).toEqual(['importance', 'conflict', 'sentiment']);
    expect(overlay.ratings.find((r) => r.label === 'sentiment')!.signed).toBe(true);
    const expectedCounts = Object.entries(summary.location_counts).sort(
      (p, q) => q[1] - p[1] || (p[0] < q[0] ? -1 : 1),
    );
    expect(overlay.locations.map((l) => [l.locationId, l.count])).toEqual(expectedCounts);
    expect(overlay.scenes.length).toBe(
      story.scenes.filter((s) => s.chapter_index === 0).length,
    );
  });
});

describe('scene hover', () => {
  it('ranks rows by importance and flags the top character', () => {
    const story = loadSampleStory();
    const scene = story.scenes.find((s) => s.appearances.length > 2)!;
    const hover = sceneHover(story, scene);
    expect(hover.characters[0]!.mostImportant).toBe(true);
    expect(hover.characters.slice(1).every((r) => !r.mostImportant)).toBe(true);
  });

  it('badges explanations distinctly from quotes', () => {
    const story = makeStory(['a'], [{ chapter: 0, cast: [{ id: 'a' }] }]);
    const hover = sceneHover(story, story.scenes[0]!);
    const row = hover.characters[0]!;
    expect(row.badge).toBe('LLM explanation');
    expect(row.quoted).toBe(false);
  });
});

describe('minimap', () => {
  it('scrolls to the scene start line', () => {
    const story = loadSampleStory();
    const strip = minimap(story, 1);
    expect(strip.length).toBe(story.scenes.filter((s) => s.chapter_index === 1).length);
    const scene = story.scenes.find((s) => s.chapter_index === 1 && s.scene_index === 2)!;
    expect(scrollTarget(strip[2]!)).toBe(scene.line_start);
  });
});

describe('settings legend', () => {
  it('organizes characters into groups with hover payloads', () => {
    const story = loadSampleStory();
    const state = { ...defaultViewState(story.meta.id), hidden: ['felix'] };
    const legend = settingsLegend(story, state);
    expect(legend.map((g) => g.groupId)).toEqual(story.groups.map((g) => g.group_id));
    const all = legend.flatMap((g) => g.entities);
    expect(all.length).toBe(story.characters.length);
    const felix = all.find((e) => e.id === 'felix')!;
    expect(felix.hidden).toBe(true);
    const tobias = all.find((e) => e.id === 'tobias-vann')!;
    expect(tobias.quote?.text).toBe(story.characters[0]!.representative_quote.text);
    expect(tobias.colorExplanation).toContain('#');
  });

  it('lists themes flat', () => {
    const story = loadSampleStory();
    const state = { ...defaultViewState(story.meta.id), entity_kind: 'themes' as const };
    const legend = settingsLegend(story, state);
    expect(legend.length).toBe(1);
    expect(legend[0]!.entities.length).toBe(story.themes.length);
  });
});

describe('sentiment scale', () => {
  it('maps the extremes and the midpoint to the documented colors', () => {
    expect(sentimentColor(-1)).toBe(SENTIMENT_NEGATIVE);
    expect(sentimentColor(1)).toBe(SENTIMENT_POSITIVE);
    expect(sentimentColor(0)).toBe(SENTIMENT_NEUTRAL);
    expect(sentimentColor(-2)).toBe(SENTIMENT_NEGATIVE); // clamped
  });
});
