"""JSON schemas for run configurations and emitted reports."""

RATIONAL = {
    "oneOf": [
        {"type": "string", "pattern": r"^\s*-?\d+(\s*/\s*\d+)?\s*$"},
        {"type": "integer"},
    ]
}
NUMBER_OR_RATIONAL = {"oneOf": [RATIONAL, {"type": "number"}]}

STRUCTURE = {
    "type": "object",
    "required": ["dims", "blocks"],
    "properties": {
        "dims": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 2},
        "blocks": {
            "type": "array",
            "items": {"type": "array", "items": {"type": "array", "items": RATIONAL}},
        },
    },
}

FIELD = {
    "type": "object",
    "required": ["terms"],
    "properties": {
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["poly", "center", "widths"],
                "properties": {
                    "poly": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["coeff", "powers"],
                            "properties": {
                                "coeff": RATIONAL,
                                "powers": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                            },
                        },
                    },
                    "center": {"type": "array", "items": NUMBER_OR_RATIONAL},
                    "widths": {
                        "type": "array",
                        "items": {"oneOf": [NUMBER_OR_RATIONAL, {"type": "null"}]},
                    },
                },
            },
        }
    },
}

GENERATOR = {
    "type": "object",
    "required": ["count", "seed"],
    "properties": {
        "count": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "width_range": {"type": "array", "items": NUMBER_OR_RATIONAL, "minItems": 2, "maxItems": 2},
        "degree_cap": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}

GRID = {
    "type": "object",
    "required": ["L", "Lt"],
    "properties": {
        "L": {"oneOf": [{"type": "number"}, {"type": "array", "items": {"type": "number"}}]},
        "Lt": {"type": "number"},
        "n": {
            "oneOf": [
                {"type": "integer", "minimum": 8},
                {"type": "array", "items": {"type": "integer", "minimum": 8}},
            ]
        },
        "weight_refinement": NUMBER_OR_RATIONAL,
    },
}

COMMANDS = ["check-structure", "verify-transport", "verify-maximal", "scaling", "refine", "toy"]

CONFIG = {
    "type": "object",
    "required": ["structure"],
    "properties": {
        "command": {"enum": COMMANDS},
        "structure": STRUCTURE,
        "fields": {"oneOf": [{"type": "array", "items": FIELD}, GENERATOR]},
        "exponents": {
            "type": "array",
            "items": {"type": "array", "items": RATIONAL, "minItems": 2, "maxItems": 2},
        },
        "sigma": {"type": "array", "items": RATIONAL},
        "radii": {"type": "array", "items": RATIONAL},
        "resolutions": {
            "type": "array",
            "items": {
                "oneOf": [
                    {"type": "integer", "minimum": 8},
                    {"type": "array", "items": {"type": "integer", "minimum": 8}},
                ]
            },
        },
        "shift": RATIONAL,
        "group": {"type": "integer", "minimum": 1},
        "grid": GRID,
        "output": {"type": "string"},
    },
}

# command -> config keys that must be present (and non-empty)
REQUIRED = {
    "check-structure": [],
    "verify-transport": ["fields", "exponents", "grid"],
    "verify-maximal": ["fields", "sigma", "grid"],
    "scaling": ["fields", "exponents", "radii", "grid"],
    "refine": ["fields", "exponents", "resolutions", "grid"],
    "toy": ["fields", "radii", "grid"],
}

_NUM_OR_NULL = {"type": ["number", "null"]}
_RATIONAL_STR = {"type": "string", "pattern": r"^-?\d+/\d+$"}

ESTIMATE = {
    "type": "object",
    "required": [
        "theorem", "beta", "gamma", "s", "sigma", "lhs", "rhs_u_factor", "rhs_g_factor",
        "rhs_combined", "ratio", "degenerate", "grid", "seed", "field_hash", "structure_hash",
    ],
    "properties": {
        "theorem": {"enum": ["transport", "maximal"]},
        "beta": _RATIONAL_STR,
        "gamma": _RATIONAL_STR,
        "s": _RATIONAL_STR,
        "sigma": {"oneOf": [_RATIONAL_STR, {"type": "null"}]},
        "lhs": {"type": "number", "minimum": 0},
        "rhs_u_factor": {"type": "number", "minimum": 0},
        "rhs_g_factor": {"type": "number", "minimum": 0},
        "rhs_combined": {"type": "number", "minimum": 0},
        "ratio": _NUM_OR_NULL,
        "degenerate": {"type": "boolean"},
        "grid": {"type": "object", "required": ["dims", "L", "Lt", "n"]},
        "seed": {"type": ["integer", "null"]},
        "field_hash": {"type": "string"},
        "structure_hash": {"type": "string"},
        "quotient": _NUM_OR_NULL,
        "gain_quotient": _NUM_OR_NULL,
    },
}

REPORT = {
    "type": "object",
    "required": ["schema_version", "command", "structure", "structure_hash", "reports", "summary"],
    "properties": {
        "schema_version": {"const": 1},
        "command": {"enum": COMMANDS},
        "structure": STRUCTURE,
        "structure_hash": {"type": "string"},
        "config_hash": {"type": "string"},
        "reports": {"type": "array", "items": ESTIMATE},
        "summary": {"type": "object"},
    },
}
