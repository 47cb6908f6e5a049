"""Score prediction metrics against simulated network performance.

For every pair of CAs, a prediction metric (lower = better) predicts which
CA performs better; the simulated NPM says which actually did. The
prediction error (PE) counts disagreeing pairs and the degree of confidence
is ``(1 - PE / C(n, 2)) * 100``.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from itertools import combinations

CPPMS = ("TID", "CDAL", "CXLS")
NPM_LABELS = {"throughput": "Throughput", "dfc": "DFC", "pdr": "PDR", "eed": "EED"}
HIGHER_IS_BETTER = {"throughput": True, "dfc": False, "pdr": True, "eed": False}
NPM_EPS_FRACTION = 0.005


class EvaluationError(ValueError):
    pass


class Relation(enum.Enum):
    A_BETTER = "A_better"
    B_BETTER = "B_better"
    TIE = "tie"


def performance_relationship(a: float, b: float, higher_is_better: bool, eps: float = 0.0) -> Relation:
    if eps < 0:
        raise EvaluationError("eps must be >= 0")
    if abs(a - b) <= eps:
        return Relation.TIE
    if (a > b) == higher_is_better:
        return Relation.A_BETTER
    return Relation.B_BETTER


def _check_keys(cppm: dict, npm: dict) -> list:
    if set(cppm) != set(npm):
        raise EvaluationError(
            f"CA key mismatch: {sorted(set(cppm) ^ set(npm), key=str)}")
    if len(cppm) < 2:
        raise EvaluationError("need at least two CAs")
    return sorted(cppm, key=str)


def wrong_pairs(cppm: dict, npm: dict, higher_is_better: bool,
                eps: float = 0.0, cppm_eps: float = 0.0) -> list[tuple]:
    keys = _check_keys(cppm, npm)
    out = []
    for a, b in combinations(keys, 2):
        predicted = performance_relationship(cppm[a], cppm[b], False, cppm_eps)
        observed = performance_relationship(npm[a], npm[b], higher_is_better, eps)
        if predicted is not observed:
            out.append((a, b))
    return out


def prediction_error(cppm: dict, npm: dict, higher_is_better: bool,
                     eps: float = 0.0, cppm_eps: float = 0.0) -> int:
    """Number of CA pairs whose predicted relationship differs from the observed one.

    A tie on exactly one side is a wrong prediction; ties on both sides agree.
    """
    return len(wrong_pairs(cppm, npm, higher_is_better, eps, cppm_eps))


def degree_of_confidence(pe: int, n_cas: int) -> float:
    if n_cas < 2:
        raise EvaluationError("n_cas must be >= 2")
    pairs = math.comb(n_cas, 2)
    if not 0 <= pe <= pairs:
        raise EvaluationError(f"pe={pe} outside [0, {pairs}]")
    return round((1 - pe / pairs) * 100, 2)


def spearman(x, y) -> float:
    """Spearman rank correlation with average ranks for ties; nan if a side is constant."""
    def ranks(v):
        order = sorted(range(len(v)), key=lambda i: v[i])
        r = [0.0] * len(v)
        i = 0
        while i < len(order):
            j = i
            while j + 1 < len(order) and v[order[j + 1]] == v[order[i]]:
                j += 1
            for k in range(i, j + 1):
                r[order[k]] = (i + j) / 2 + 1
            i = j + 1
        return r

    if len(x) != len(y) or len(x) < 2:
        raise EvaluationError("spearman needs two equal-length sequences of length >= 2")
    rx, ry = ranks(list(x)), ranks(list(y))
    mx, my = sum(rx) / len(rx), sum(ry) / len(ry)
    sxy = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    sxx = sum((a - mx) ** 2 for a in rx)
    syy = sum((b - my) ** 2 for b in ry)
    if sxx == 0 or syy == 0:
        return math.nan
    return sxy / math.sqrt(sxx * syy)


@dataclass
class EvaluationReport:
    schemes: list[str]
    pe: dict[tuple[str, str], int] = field(default_factory=dict)
    doc: dict[tuple[str, str], float] = field(default_factory=dict)
    series: dict[tuple[str, str], list[tuple[float, float, str]]] = field(default_factory=dict)
    npm_eps: dict[str, float] = field(default_factory=dict)

    @property
    def pairs(self) -> int:
        return math.comb(len(self.schemes), 2)

    def grid_csv(self, which: str) -> str:
        """PE or DoC grid, one row per NPM and one column per CPPM."""
        cells = self.pe if which == "pe" else self.doc
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["npm", *CPPMS])
        for npm, label in NPM_LABELS.items():
            row = [cells[(c, npm)] for c in CPPMS]
            w.writerow([label, *(f"{v:.2f}" if which == "doc" else v for v in row)])
        return buf.getvalue()

    def series_csv(self, cppm: str, npm: str) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric_value", "npm_value", "scheme"])
        for mv, nv, scheme in self.series[(cppm, npm)]:
            w.writerow([_num(mv), _num(nv), scheme])
        return buf.getvalue()

    def doc_table(self) -> str:
        """Plain-text DoC grid, NPM rows by CPPM columns."""
        lines = [f"{'Degree of Confidence (%)':<26}" + "".join(f"{c:>10}" for c in CPPMS)]
        for npm, label in NPM_LABELS.items():
            lines.append(f"{label:<26}" + "".join(f"{self.doc[(c, npm)]:>10.2f}" for c in CPPMS))
        return "\n".join(lines)


def _num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else f"{v:.6f}"


def build_report(metrics: dict[str, dict[str, float]], npms: dict[str, dict[str, float]],
                 npm_eps_fraction: float = NPM_EPS_FRACTION, cppm_eps: float = 0.0) -> EvaluationReport:
    """Fill all 12 (CPPM, NPM) cells.

    ``metrics[scheme][cppm]`` and ``npms[scheme][npm]`` must cover every
    scheme, CPPM and NPM. The NPM tie tolerance is ``npm_eps_fraction`` of
    the largest absolute observed value of that NPM.
    """
    schemes = sorted(metrics)
    if set(npms) != set(schemes):
        raise EvaluationError(f"schemes differ: metrics {schemes} vs npms {sorted(npms)}")
    if len(schemes) < 2:
        raise EvaluationError("need at least two CAs")
    for s in schemes:
        missing = [c for c in CPPMS if c not in metrics[s]] + [n for n in NPM_LABELS if n not in npms[s]]
        if missing:
            raise EvaluationError(f"scheme {s} missing {missing}")

    report = EvaluationReport(schemes)
    for npm, higher in HIGHER_IS_BETTER.items():
        observed = {s: float(npms[s][npm]) for s in schemes}
        eps = npm_eps_fraction * max(abs(v) for v in observed.values())
        report.npm_eps[npm] = eps
        for cppm in CPPMS:
            predicted = {s: float(metrics[s][cppm]) for s in schemes}
            pe = prediction_error(predicted, observed, higher, eps, cppm_eps)
            report.pe[(cppm, npm)] = pe
            report.doc[(cppm, npm)] = degree_of_confidence(pe, len(schemes))
            report.series[(cppm, npm)] = sorted(
                ((predicted[s], observed[s], s) for s in schemes), key=lambda r: (r[0], r[2]))
    return report
