"""JSON schema for every report the command line tool writes."""

from __future__ import annotations

_num = {"type": "number"}
_num_or_null = {"type": ["number", "null"]}
_int = {"type": "integer"}
_bool = {"type": "boolean"}
_pair = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}

_estimate = {
    "type": "object",
    "required": ["config", "mean_re", "mean_im", "stderr_re", "stderr_im", "n_paths", "n_eff"],
    "properties": {
        "config": {"type": "object"},
        "x": {},
        "lambda_re": _num,
        "lambda_im": _num,
        "mean_re": _num,
        "mean_im": _num,
        "stderr_re": {"type": "number", "minimum": 0},
        "stderr_im": {"type": "number", "minimum": 0},
        "n_paths": {"type": "integer", "minimum": 1},
        "n_eff": {"type": "number", "minimum": 0},
        "weight_max": _num,
        "oracle_value": _pair,
        "z_score": _num,
    },
}


def _rows(item: dict) -> dict:
    return {"type": "object", "required": ["rows"],
            "properties": {"rows": {"type": "array", "items": {"type": "object", **item}}}}


RESULTS = {
    "green": {"type": "object", "required": ["r", "value", "abs_error_estimate"],
              "properties": {"r": _num, "value": _num, "abs_error_estimate": _num, "evaluations": _int}},
    "heat-check": {"type": "object", "required": ["constants", "small_t_ok", "large_t_ok"],
                   "properties": {"constants": {"type": "object"}, "small_t_ok": _bool, "large_t_ok": _bool,
                                  "small_t_worst": _num, "large_t_worst": _num}},
    "tail": _rows({"required": ["R", "value"], "properties": {"R": _num, "value": _num,
                                                             "abs_error_estimate": _num}}),
    "survival": _rows({"required": ["t", "oracle"], "properties": {"t": _num, "oracle": _num_or_null,
                                                                   "empirical": _num, "se": _num}}),
    "exit-sim": {"type": "object", "required": ["n_paths", "mean_tau", "stderr_tau"],
                 "properties": {"n_paths": _int, "mean_tau": _num, "stderr_tau": _num,
                                "mean_tau_oracle": _num_or_null, "samples_file": {"type": ["string", "null"]}}},
    "eigenfunction": _estimate,
    "spectrum": {"type": "object", "required": ["R", "eigenvalues"],
                 "properties": {"R": _num, "eigenvalues": {"type": "array", "items": _num},
                                "lambda1": _num}},
    "boundary-probe": _rows({"required": ["delta", "error", "error_se"],
                             "properties": {"delta": _num, "error": _num, "error_se": _num,
                                            "oracle_error": _num_or_null, "estimate": _estimate}}),
    "transience": _rows({"required": ["T", "mean_distance", "stderr"],
                         "properties": {"T": _num, "mean_distance": _num, "stderr": _num,
                                        "frac_beyond": {"type": "object"}}}),
    "verify-all": {"type": "object", "required": ["all_passed", "checks"],
                   "properties": {"all_passed": _bool, "seed": _int, "tool": {"type": "string"},
                                  "checks": {"type": "array", "items": {
                                      "type": "object",
                                      "required": ["check_name", "status", "value", "tolerance"],
                                      "properties": {"check_name": {"type": "string"},
                                                     "status": {"enum": ["pass", "fail"]}}}}}},
}


def report_schema() -> dict:
    """Schema of the output envelope ``{tool, config, result}`` with per-task results."""
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "harmexit report",
        "type": "object",
        "required": ["tool", "config", "result"],
        "properties": {
            "tool": {"type": "string"},
            "config": {"type": "object", "required": ["space", "task", "params"],
                       "properties": {"task": {"enum": sorted(RESULTS)}}},
            "result": {},
        },
        "allOf": [
            {"if": {"properties": {"config": {"properties": {"task": {"const": task}}}}},
             "then": {"properties": {"result": {"$ref": f"#/$defs/{task}"}}}}
            for task in sorted(RESULTS)
        ],
        "$defs": RESULTS,
    }
