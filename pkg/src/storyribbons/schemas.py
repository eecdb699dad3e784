"""Response schemas for every structured LLM call, keyed by schema tag.

The gateway validates each raw response against the schema named in the
request and re-prompts with the validation error on failure, which keeps
provider output contracts in one place.
"""

from __future__ import annotations

from jsonschema import Draft202012Validator

_RATINGS = {
    "type": "object",
    "properties": {
        "importance": {"type": "number"},
        "conflict": {"type": "number"},
        "sentiment": {"type": "number"},
    },
    "required": ["importance", "conflict", "sentiment"],
}

SCHEMAS: dict[str, dict] = {
    "scene_split": {
        "type": "object",
        "properties": {
            "scenes": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "title": {"type": "string"},
                        "summary": {"type": "string"},
                        "line_start": {"type": "integer"},
                        "line_end": {"type": "integer"},
                        "location": {"type": "string"},
                        "boundary_explanation": {"type": "string"},
                    },
                    "required": ["title", "summary", "line_start", "line_end", "location"],
                },
            }
        },
        "required": ["scenes"],
    },
    "scene_detail": {
        "type": "object",
        "properties": {
            "ratings": _RATINGS,
            "appearances": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "name": {"type": "string", "minLength": 1},
                        "sentiment": {"type": "number"},
                        "emotion": {"type": "string"},
                        "quote": {"type": "string"},
                    },
                    "required": ["name", "sentiment"],
                },
            },
        },
        "required": ["ratings", "appearances"],
    },
    "explanation": {
        "type": "object",
        "properties": {"explanation": {"type": "string", "minLength": 1}},
        "required": ["explanation"],
    },
    "dedup_groups": {
        "type": "object",
        "properties": {
            "groups": {
                "type": "array",
                "items": {"type": "array", "items": {"type": "string"}},
            }
        },
        "required": ["groups"],
    },
    "chapter_summary": {
        "type": "object",
        "properties": {"summary": {"type": "string"}, "ratings": _RATINGS},
        "required": ["summary", "ratings"],
    },
    "interaction": {
        "type": "object",
        "properties": {"summary": {"type": "string"}},
        "required": ["summary"],
    },
    "character_profile": {
        "type": "object",
        "properties": {
            "group": {"type": "string", "minLength": 1},
            "color": {"type": "string"},
            "color_explanation": {"type": "string"},
            "quote": {"type": "string"},
        },
        "required": ["group", "color", "color_explanation", "quote"],
    },
    "location_profile": {
        "type": "object",
        "properties": {"quote": {"type": "string"}},
        "required": ["quote"],
    },
    "theme_colors": {
        "type": "object",
        "properties": {
            "colors": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {"name": {"type": "string"}, "color": {"type": "string"}},
                    "required": ["name", "color"],
                },
            }
        },
        "required": ["colors"],
    },
    "boundary_labels": {
        "type": "object",
        "properties": {
            "labels": {
                "type": "array",
                "items": {
                    "type": "string",
                    "enum": [
                        "location_change",
                        "character_change",
                        "focus_shift",
                        "character_action",
                        "time_change",
                        "other",
                    ],
                },
            }
        },
        "required": ["labels"],
    },
    "ask_story": {
        "type": "object",
        "properties": {
            "chapter_index": {"type": "integer"},
            "explanation": {"type": "string", "minLength": 1},
        },
        "required": ["chapter_index", "explanation"],
    },
    "ask_text": {
        "type": "object",
        "properties": {"answer": {"type": "string", "minLength": 1}},
        "required": ["answer"],
    },
    "trait_ranking": {
        "type": "object",
        "properties": {
            "per_scene": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "chapter_index": {"type": "integer"},
                        "scene_index": {"type": "integer"},
                        "ranked": {
                            "type": "array",
                            "items": {
                                "type": "object",
                                "properties": {
                                    "entity_id": {"type": "string"},
                                    "justification": {"type": "string"},
                                },
                                "required": ["entity_id", "justification"],
                            },
                        },
                    },
                    "required": ["chapter_index", "scene_index", "ranked"],
                },
            }
        },
        "required": ["per_scene"],
    },
    "color_categories": {
        "type": "object",
        "properties": {
            "categories": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {"label": {"type": "string"}, "color": {"type": "string"}},
                    "required": ["label", "color"],
                },
            },
            "assignments": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {
                        "entity_id": {"type": "string"},
                        "label": {"type": "string"},
                        "explanation": {"type": "string"},
                    },
                    "required": ["entity_id", "label"],
                },
            },
        },
        "required": ["categories", "assignments"],
    },
}

_validators: dict[str, Draft202012Validator] = {}


def get_validator(schema_tag: str) -> Draft202012Validator:
    if schema_tag not in SCHEMAS:
        raise KeyError(f"no response schema registered under {schema_tag!r}")
    if schema_tag not in _validators:
        _validators[schema_tag] = Draft202012Validator(SCHEMAS[schema_tag])
    return _validators[schema_tag]
