"""IOB2 span tooling, evaluation metrics and leakage-safe splits for legal
violation corpora. Records are plain dicts in the JSONL corpus layout."""

import json

from . import _vioscan
from ._vioscan import (
    VioscanError,
    cohen_kappa,
    decode_spans,
    encode_spans,
    f1_from_pr,
    parse_nli_output,
    repair,
    validate,
)

__all__ = [
    "VioscanError",
    "cohen_kappa",
    "corpus_stats",
    "coa_split",
    "decode_spans",
    "encode_spans",
    "eval_ner",
    "eval_nli",
    "f1_from_pr",
    "leave_one_out",
    "load_ner",
    "load_nli",
    "parse_generated_ner",
    "parse_ner_output",
    "parse_nli_output",
    "repair",
    "validate",
]


def eval_ner(gold, pred, policy="promote"):
    """gold: NER record dicts; pred: one tag list per gold record."""
    return json.loads(_vioscan.eval_ner(json.dumps(list(gold)), [list(p) for p in pred], policy))


def eval_nli(gold, pred):
    return json.loads(_vioscan.eval_nli(list(gold), list(pred)))


def load_ner(path, format="jsonl", fields=""):
    return json.loads(_vioscan.load_ner(str(path), format, fields))


def load_nli(path, fields=""):
    return json.loads(_vioscan.load_nli(str(path), fields))


def corpus_stats(ner=(), nli=(), policy="strict"):
    return json.loads(_vioscan.corpus_stats(json.dumps(list(ner)), json.dumps(list(nli)), policy))


def coa_split(records, test_fraction, seed):
    return json.loads(_vioscan.coa_split(json.dumps(list(records)), test_fraction, seed))


def leave_one_out(records):
    return json.loads(_vioscan.leave_one_out(json.dumps(list(records))))


def parse_generated_ner(raw, id=""):
    return json.loads(_vioscan.parse_generated_ner(raw, id))


def parse_ner_output(raw, tokens, policy="promote"):
    return json.loads(_vioscan.parse_ner_output(raw, list(tokens), policy))
