/**
 * Data shapes as served by the story service, plus the client-side view state.
 *
 * The JSON field names (snake_case) are kept verbatim so a fetched story.json
 * can be used without any mapping layer.
 */

export type EvidenceVariant = 'quote' | 'explanation';

export interface Evidence {
  variant: EvidenceVariant;
  text: string;
  verified: boolean;
}

export interface Ratings {
  importance: number;
  conflict: number;
  sentiment: number;
}

export type EntityKind = 'character' | 'theme';

export interface EntityAppearance {
  entity_id: string;
  kind: EntityKind;
  sentiment: number;
  emotion: string;
  evidence: Evidence;
}

export interface StoryMeta {
  id: string;
  title: string;
  author: string;
  genre: string;
  source: string;
  line_count: number;
}

export interface Chapter {
  index: number;
  title: string;
  line_start: number;
  line_end: number;
}

export interface Interaction {
  a: string;
  b: string;
  summary: string;
}

export interface ChapterSummary {
  chapter_index: number;
  summary: string;
  ratings: Ratings;
  length_norm: number;
  character_counts: Record<string, number>;
  location_counts: Record<string, number>;
  interactions: Interaction[];
}

export interface Scene {
  chapter_index: number;
  scene_index: number;
  title: string;
  summary: string;
  location_id: string;
  boundary_explanation: string;
  /** Chapter-local, 0-based, end-exclusive. */
  line_start: number;
  line_end: number;
  ratings: Ratings;
  appearances: EntityAppearance[];
}

export interface CharacterEntry {
  entity_id: string;
  canonical_name: string;
  aliases: string[];
  group_id: string;
  color: string;
  color_explanation: string;
  representative_quote: Evidence;
}

export interface Group {
  group_id: string;
  label: string;
}

export interface LocationEntry {
  entity_id: string;
  canonical_name: string;
  aliases: string[];
  first_appearance: [number, number];
  representative_quote: Evidence;
}

export interface ThemeEntry {
  entity_id: string;
  name: string;
  color: string;
}

export interface StoryData {
  schema_version: number;
  meta: StoryMeta;
  chapters: Chapter[];
  chapter_summaries: ChapterSummary[];
  scenes: Scene[];
  characters: CharacterEntry[];
  groups: Group[];
  locations: LocationEntry[];
  themes: ThemeEntry[];
}

// ---------------------------------------------------------------------------
// Service request/response envelopes
// ---------------------------------------------------------------------------

export interface StoryListing {
  id: string;
  title: string;
  author: string;
  genre: string;
  source: string;
  line_count: number;
}

export interface AskStoryResponse {
  question: string;
  chapter_index: number;
  explanation: string;
}

export interface AskTextResponse {
  question: string;
  answer: string;
}

export interface RankedEntry {
  entity_id: string;
  justification: string;
}

export interface TraitRanking {
  trait: string;
  scope: 'characters' | 'themes';
  per_scene: {
    chapter_index: number;
    scene_index: number;
    ranked: RankedEntry[];
  }[];
  repairs: string[];
}

export interface ColorCategorization {
  attribute: string;
  scope: 'characters' | 'themes';
  categories: { label: string; color: string }[];
  assignments: Record<string, { label: string; explanation: string }>;
  repairs: string[];
}

export interface ServiceErrorBody {
  error: { code: string; message: string };
}

// ---------------------------------------------------------------------------
// View state
// ---------------------------------------------------------------------------

export type XMode = 'chapter' | 'scene';
export type YMode = 'location' | 'character' | 'importance' | 'sentiment' | 'custom_trait';
export type RibbonColorMode =
  | 'llm_assigned'
  | 'group'
  | 'importance'
  | 'sentiment'
  | 'custom_attribute';
export type EntityScope = 'characters' | 'themes';
export type LabelEncoding = 'importance' | 'sentiment' | 'conflict' | 'length' | 'num_characters';

export interface ViewState {
  story_id: string;
  x_mode: XMode;
  y_mode: YMode;
  ribbon_color_mode: RibbonColorMode;
  entity_kind: EntityScope;
  label_encoding: LabelEncoding;
  scale_by_length: boolean;
  /** Lifts the default cap of 30 simultaneously visible ribbons. */
  show_all: boolean;
  highlighted: string[];
  hidden: string[];
  trait: string;
  attribute: string;
}
