/**
 * Browser entry point: wires the pure layout/render modules to the story
 * service and keeps the full view state in the URL hash so views stay
 * shareable and refresh-safe.
 */
import { RequestSlot, ServiceClient, ServiceError } from './api.js';
import { renderNetwork, renderOverview } from './render.js';
import { decodeViewState, encodeViewState } from './state.js';
import type {
  AskStoryResponse,
  ColorCategorization,
  StoryData,
  TraitRanking,
  ViewState,
} from './types.js';
import { detailOverlay, settingsLegend } from './views.js';

const X_MODES = ['chapter', 'scene'] as const;
const Y_MODES = ['location', 'character', 'importance', 'sentiment', 'custom_trait'] as const;
const COLOR_MODES = ['llm_assigned', 'group', 'importance', 'sentiment', 'custom_attribute'] as const;
const KINDS = ['characters', 'themes'] as const;
const LABELS = ['importance', 'sentiment', 'conflict', 'length', 'num_characters'] as const;

interface AppContext {
  client: ServiceClient;
  root: HTMLElement;
  state: ViewState;
  story: StoryData | null;
  etag: string;
  // On-the-fly results keyed by the trait/attribute they answer.
  ranking: TraitRanking | null;
  categorization: ColorCategorization | null;
  overlayChapter: number | null;
  overlayCumulative: boolean;
  askSlot: RequestSlot;
  traitSlot: RequestSlot;
  attributeSlot: RequestSlot;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text = '',
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text) node.textContent = text;
  return node;
}

function select(
  label: string,
  values: readonly string[],
  current: string,
  onChange: (value: string) => void,
): HTMLElement {
  const wrap = el('label', { class: 'control' }, label + ' ');
  const box = el('select');
  for (const v of values) {
    const opt = el('option', { value: v }, v.replace(/_/g, ' '));
    if (v === current) opt.selected = true;
    box.append(opt);
  }
  box.addEventListener('change', () => onChange(box.value));
  wrap.append(box);
  return wrap;
}

function checkbox(label: string, current: boolean, onChange: (value: boolean) => void): HTMLElement {
  const wrap = el('label', { class: 'control' });
  const box = el('input', { type: 'checkbox' });
  box.checked = current;
  box.addEventListener('change', () => onChange(box.checked));
  wrap.append(box, document.createTextNode(' ' + label));
  return wrap;
}

function toast(ctx: AppContext, message: string): void {
  const note = el('div', { class: 'toast' }, message);
  ctx.root.append(note);
  setTimeout(() => note.remove(), 4000);
}

function setState(ctx: AppContext, patch: Partial<ViewState>): void {
  ctx.state = { ...ctx.state, ...patch };
  // hashchange fires next; render happens there so back/forward also work.
  window.location.hash = encodeViewState(ctx.state);
}

function spinnerButton(label: string, onClick: (button: HTMLButtonElement) => void): HTMLButtonElement {
  const button = el('button', {}, label);
  button.addEventListener('click', () => onClick(button));
  return button;
}

/** Trait/attribute requests bill LLM calls, so they only ever run on click. */
function customControls(ctx: AppContext): HTMLElement {
  const wrap = el('div', { class: 'custom-controls' });

  const traitInput = el('input', { type: 'text', placeholder: 'trait, e.g. boldness' });
  traitInput.value = ctx.state.trait;
  const traitGo = spinnerButton('Rank', (button) => {
    const trait = traitInput.value.trim();
    if (!trait) return;
    button.disabled = true;
    button.textContent = 'Ranking…';
    ctx.traitSlot
      .run((signal) => ctx.client.rankByTrait(ctx.state.story_id, trait, ctx.state.entity_kind, signal))
      .then((ranking) => {
        ctx.ranking = ranking;
        setState(ctx, { trait, y_mode: 'custom_trait' });
      })
      .catch((err: unknown) => {
        if (err instanceof DOMException && err.name === 'AbortError') return;
        toast(ctx, err instanceof ServiceError ? err.message : String(err));
        render(ctx);
      });
  });
  wrap.append(el('div', {}, ''), traitInput, traitGo);

  const attrInput = el('input', { type: 'text', placeholder: 'attribute, e.g. mood' });
  attrInput.value = ctx.state.attribute;
  const attrGo = spinnerButton('Color', (button) => {
    const attribute = attrInput.value.trim();
    if (!attribute) return;
    button.disabled = true;
    button.textContent = 'Coloring…';
    ctx.attributeSlot
      .run((signal) =>
        ctx.client.categorizeByColor(ctx.state.story_id, attribute, ctx.state.entity_kind, signal),
      )
      .then((categorization) => {
        ctx.categorization = categorization;
        setState(ctx, { attribute, ribbon_color_mode: 'custom_attribute' });
      })
      .catch((err: unknown) => {
        if (err instanceof DOMException && err.name === 'AbortError') return;
        // Failed categorize keeps the previous palette; just tell the user.
        toast(ctx, err instanceof ServiceError ? err.message : String(err));
        render(ctx);
      });
  });
  wrap.append(attrInput, attrGo);
  return wrap;
}

function legendPanel(ctx: AppContext): HTMLElement {
  const story = ctx.story!;
  const panel = el('div', { class: 'legend' });
  if (ctx.categorization && ctx.state.ribbon_color_mode === 'custom_attribute') {
    const cats = el('div', { class: 'categories' });
    cats.append(el('h4', {}, `Categories: ${ctx.categorization.attribute}`));
    for (const cat of ctx.categorization.categories) {
      const row = el('div', { class: 'category' });
      const chip = el('span', { class: 'chip' });
      chip.style.background = cat.color;
      row.append(chip, document.createTextNode(' ' + cat.label));
      cats.append(row);
    }
    panel.append(cats);
  }
  for (const group of settingsLegend(story, ctx.state)) {
    panel.append(el('h4', {}, group.label));
    for (const entry of group.entities) {
      const row = el('div', { class: 'legend-entry' + (entry.hidden ? ' hidden' : '') });
      const chip = el('span', { class: 'chip' });
      chip.style.background = entry.color;
      const name = el('span', { class: 'name' }, entry.name);
      const explanation = ctx.categorization?.assignments[entry.id]?.explanation ?? '';
      row.title = [
        entry.quote ? `"${entry.quote.text}"` : '',
        entry.colorExplanation,
        explanation,
      ]
        .filter(Boolean)
        .join('\n');
      row.append(chip, name);
      row.addEventListener('click', () => {
        const hidden = entry.hidden
          ? ctx.state.hidden.filter((id) => id !== entry.id)
          : [...ctx.state.hidden, entry.id];
        setState(ctx, { hidden });
      });
      row.addEventListener('mouseenter', () => setState(ctx, { highlighted: [entry.id] }));
      row.addEventListener('mouseleave', () => setState(ctx, { highlighted: [] }));
      panel.append(row);
    }
  }
  return panel;
}

function sidebar(ctx: AppContext): HTMLElement {
  const bar = el('aside', { class: 'sidebar' });
  bar.append(
    select('x axis', X_MODES, ctx.state.x_mode, (v) => setState(ctx, { x_mode: v as ViewState['x_mode'] })),
    select('y axis', Y_MODES, ctx.state.y_mode, (v) => {
      if (v === 'custom_trait' && !ctx.ranking) {
        toast(ctx, 'Rank by a trait first; custom trait lanes need a ranking.');
        render(ctx);
        return;
      }
      setState(ctx, { y_mode: v as ViewState['y_mode'] });
    }),
    select('ribbon color', COLOR_MODES, ctx.state.ribbon_color_mode, (v) => {
      if (v === 'custom_attribute' && !ctx.categorization) {
        toast(ctx, 'Categorize by an attribute first; custom colors need categories.');
        render(ctx);
        return;
      }
      setState(ctx, { ribbon_color_mode: v as ViewState['ribbon_color_mode'] });
    }),
    select('entities', KINDS, ctx.state.entity_kind, (v) => {
      // Rankings and categorizations are per-kind; drop them on switch.
      ctx.ranking = null;
      ctx.categorization = null;
      const patch: Partial<ViewState> = { entity_kind: v as ViewState['entity_kind'] };
      if (ctx.state.y_mode === 'custom_trait') patch.y_mode = 'character';
      if (ctx.state.ribbon_color_mode === 'custom_attribute') patch.ribbon_color_mode = 'llm_assigned';
      setState(ctx, patch);
    }),
    select('labels', LABELS, ctx.state.label_encoding, (v) =>
      setState(ctx, { label_encoding: v as ViewState['label_encoding'] }),
    ),
    checkbox('scale width by length', ctx.state.scale_by_length, (v) =>
      setState(ctx, { scale_by_length: v }),
    ),
    checkbox('show all ribbons', ctx.state.show_all, (v) => setState(ctx, { show_all: v })),
    customControls(ctx),
    legendPanel(ctx),
  );
  return bar;
}

function askPanel(ctx: AppContext): HTMLElement {
  const panel = el('div', { class: 'ask' });
  const input = el('input', { type: 'text', placeholder: 'Ask about the story…' });
  const out = el('div', { class: 'ask-answer' });
  const go = spinnerButton('Ask', (button) => {
    const question = input.value.trim();
    if (!question) return;
    button.disabled = true;
    out.textContent = 'Thinking…';
    ctx.askSlot
      .run((signal) => ctx.client.ask(ctx.state.story_id, question, {}, signal))
      .then((answer) => {
        const story = answer as AskStoryResponse;
        const chapter = ctx.story?.chapters.find((c) => c.index === story.chapter_index);
        out.textContent = `Chapter ${story.chapter_index}${
          chapter ? ` (${chapter.title})` : ''
        }: ${story.explanation}`;
      })
      .catch((err: unknown) => {
        if (err instanceof DOMException && err.name === 'AbortError') return;
        // Keep the view usable; failures only touch this panel.
        out.textContent =
          'Ask failed: ' + (err instanceof ServiceError ? err.message : String(err));
      })
      .finally(() => {
        button.disabled = false;
        button.textContent = 'Ask';
      });
  });
  panel.append(input, go, out);
  return panel;
}

function overlayPanel(ctx: AppContext): HTMLElement | null {
  if (ctx.overlayChapter === null || !ctx.story) return null;
  const data = detailOverlay(ctx.story, ctx.overlayChapter, ctx.overlayCumulative);
  const panel = el('div', { class: 'overlay' });
  const head = el('div', { class: 'overlay-head' });
  head.append(el('h3', {}, `${data.chapterIndex}. ${data.title}`));
  const close = el('button', {}, 'Close');
  close.addEventListener('click', () => {
    ctx.overlayChapter = null;
    render(ctx);
  });
  head.append(
    checkbox('cumulative', ctx.overlayCumulative, (v) => {
      ctx.overlayCumulative = v;
      render(ctx);
    }),
    close,
  );
  panel.append(head, el('p', { class: 'summary' }, data.summary));

  const bars = el('div', { class: 'ratings' });
  for (const bar of data.ratings) {
    const row = el('div', { class: 'rating' }, `${bar.label}: ${bar.value.toFixed(2)}`);
    const fill = el('span', { class: 'fill' });
    const share = bar.signed ? (bar.value + 1) / 2 : bar.value;
    fill.style.width = `${Math.round(share * 100)}%`;
    row.append(fill);
    bars.append(row);
  }
  panel.append(bars);

  const network = el('div', { class: 'network' });
  network.innerHTML = renderNetwork(data.network);
  panel.append(network);

  const locations = el('div', { class: 'locations' });
  for (const loc of data.locations) {
    locations.append(el('div', { class: 'location' }, `${loc.name}: ${loc.count}`));
  }
  panel.append(locations);
  return panel;
}

function overviewPanel(ctx: AppContext): HTMLElement {
  const story = ctx.story!;
  const wrap = el('main', { class: 'overview' });
  try {
    wrap.innerHTML = renderOverview(story, ctx.state, {
      traitRanking: ctx.ranking ?? undefined,
      categorization: ctx.categorization ?? undefined,
    });
  } catch (err) {
    wrap.append(el('p', { class: 'layout-error' }, String(err)));
    return wrap;
  }
  // Chapter labels open the detail overlay for that chapter.
  const labels = wrap.querySelectorAll<SVGTextElement>('text.step-label');
  labels.forEach((label, i) => {
    label.style.cursor = 'pointer';
    label.addEventListener('click', () => {
      const step =
        ctx.state.x_mode === 'chapter' ? i : story.scenes[i]?.chapter_index ?? 0;
      ctx.overlayChapter = step;
      render(ctx);
    });
  });
  return wrap;
}

function render(ctx: AppContext): void {
  ctx.root.replaceChildren();
  if (!ctx.story) {
    ctx.root.append(el('p', { class: 'loading' }, 'Loading story…'));
    return;
  }
  const header = el('header');
  header.append(el('h2', {}, `${ctx.story.meta.title} by ${ctx.story.meta.author}`), askPanel(ctx));
  ctx.root.append(header, sidebar(ctx), overviewPanel(ctx));
  const overlay = overlayPanel(ctx);
  if (overlay) ctx.root.append(overlay);
}

async function loadStory(ctx: AppContext): Promise<void> {
  const result = await ctx.client.story(ctx.state.story_id, ctx.etag || undefined);
  if (!result.notModified) {
    ctx.story = result.story;
    ctx.etag = result.etag;
    ctx.ranking = null;
    ctx.categorization = null;
    ctx.overlayChapter = null;
  }
}

export async function boot(root: HTMLElement, baseUrl: string): Promise<void> {
  const client = new ServiceClient(baseUrl);
  const listing = await client.listStories();
  const fallback = listing[0]?.id ?? '';
  const initial = decodeViewState(window.location.hash.replace(/^#/, ''), fallback);
  if (!listing.some((s) => s.id === initial.story_id)) initial.story_id = fallback;

  const ctx: AppContext = {
    client,
    root,
    state: initial,
    story: null,
    etag: '',
    ranking: null,
    categorization: null,
    overlayChapter: null,
    overlayCumulative: false,
    askSlot: new RequestSlot(),
    traitSlot: new RequestSlot(),
    attributeSlot: new RequestSlot(),
  };

  window.addEventListener('hashchange', () => {
    const next = decodeViewState(window.location.hash.replace(/^#/, ''), fallback);
    const storyChanged = next.story_id !== ctx.state.story_id;
    ctx.state = next;
    if (storyChanged) {
      ctx.etag = '';
      void loadStory(ctx).then(() => render(ctx));
      return;
    }
    render(ctx);
  });

  render(ctx);
  await loadStory(ctx);
  if (!window.location.hash) {
    window.location.hash = encodeViewState(ctx.state);
  }
  render(ctx);
}

declare global {
  interface Window {
    storyRibbons?: { boot: typeof boot };
  }
}

if (typeof window !== 'undefined') {
  window.storyRibbons = { boot };
}
