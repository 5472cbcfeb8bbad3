"""Output-based prediction error and per-run competitive-bound accounting."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from .model import ArrivalSequence
from .offline import OptResult, opt_dp

# slack for comparisons against irrational thresholds, scaled by v(ALG)
REL_TOL = 1e-9


@dataclass(frozen=True)
class ErrorReport:
    eta: int
    false_positive_value: int  # value only the predicted optimum transmits
    false_negative_value: int  # value only the true optimum transmits
    common_value: int


def _error_from(opt_true: OptResult, opt_pred: OptResult) -> ErrorReport:
    # a packet is the pair (id, value): a shared id whose value was mispredicted
    # counts on both sides rather than in the common part
    true_set = {(p.id, p.value) for p in opt_true.schedule.packets()}
    pred_set = {(p.id, p.value) for p in opt_pred.schedule.packets()}
    fp = sum(v for _, v in pred_set - true_set)
    fn = sum(v for _, v in true_set - pred_set)
    common = sum(v for _, v in true_set & pred_set)
    return ErrorReport(fp + fn, fp, fn, common)


def prediction_error(sigma: ArrivalSequence, sigma_hat: ArrivalSequence, tie_break: str = "canonical") -> ErrorReport:
    """Total value of the symmetric difference of the two offline-optimal schedules."""
    return _error_from(opt_dp(sigma, tie_break=tie_break), opt_dp(sigma_hat, tie_break=tie_break))


def ratio(opt: int, alg: int) -> float:
    if alg > 0:
        return opt / alg
    return math.inf if opt > 0 else 1.0


def smoothness_bound(eta: int, alg: int, rho: float, beta: float) -> float:
    """min(rho + eta / v(ALG), beta)."""
    if alg <= 0:
        return beta
    return min(rho + eta / alg, beta)


def _leq(lhs: int, factor: float, alg: int, extra: float = 0) -> bool:
    """lhs <= factor * alg + extra, exact when factor is integral."""
    if float(factor).is_integer():
        return lhs <= int(factor) * alg + extra
    return lhs <= factor * alg + extra + REL_TOL * alg


@dataclass
class RunRecord:
    instance_id: str
    seed: int
    rho: float
    fallback: str
    v_opt_true: int
    v_opt_pred: int
    v_alg: int
    v_pg: int
    v_greedy: int
    eta: int
    switch_step: int | None
    v_opt_buf_switch: int
    ratio: float
    f_eta: float
    flag_a: bool
    flag_b: bool
    flag_c: bool
    flag_d: bool
    # not part of the CSV row
    beta: float = math.sqrt(3.0)
    v_follow: int | None = None
    switch_reason: str | None = None
    extras: dict = field(default_factory=dict)

    CSV_COLUMNS = (
        "instance_id", "seed", "rho", "fallback", "v_opt_true", "v_opt_pred", "v_alg", "v_pg",
        "v_greedy", "eta", "switch_step", "v_opt_buf_switch", "ratio", "f_eta",
        "flag_a", "flag_b", "flag_c", "flag_d",
    )

    @property
    def switched(self) -> bool:
        return self.switch_step is not None

    @property
    def all_flags(self) -> bool:
        return self.flag_a and self.flag_b and self.flag_c and self.flag_d

    @property
    def additive_share(self) -> float:
        return self.v_opt_buf_switch / self.v_alg if self.v_alg > 0 else 0.0

    def csv_row(self) -> list[str]:
        d = asdict(self)
        return [_fmt(d[c]) for c in self.CSV_COLUMNS]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return "inf" if math.isinf(x) else repr(round(x, 12))
    return str(x)


def bound_suite(
    *,
    v_opt_true: int,
    v_opt_pred: int,
    v_alg: int,
    v_pg: int,
    v_greedy: int,
    eta: int,
    switch_step: int | None,
    v_opt_buf_switch: int,
    rho: float,
    beta: float,
    fallback: str = "pg",
    instance_id: str = "",
    seed: int = 0,
    **extra,
) -> RunRecord:
    """Evaluate the four per-run bounds and package them as a RunRecord.

    a. |v(OPT(sigma)) - v(OPT(sigma_hat))| <= eta
    b. without a switch: OPT <= rho*ALG + eta and OPT <= beta*ALG
    c. with a switch: OPT <= beta*ALG + v(OPT's buffer at the end of step t*-1)
    d. OPT <= 2*GREEDY
    """
    flag_a = abs(v_opt_true - v_opt_pred) <= eta
    if switch_step is None:
        flag_b = _leq(v_opt_true, rho, v_alg, eta) and _leq(v_opt_true, beta, v_alg)
        flag_c = True
    else:
        flag_b = True
        flag_c = _leq(v_opt_true, beta, v_alg, v_opt_buf_switch)
    flag_d = v_opt_true <= 2 * v_greedy
    return RunRecord(
        instance_id=instance_id,
        seed=seed,
        rho=rho,
        fallback=fallback,
        v_opt_true=v_opt_true,
        v_opt_pred=v_opt_pred,
        v_alg=v_alg,
        v_pg=v_pg,
        v_greedy=v_greedy,
        eta=eta,
        switch_step=switch_step,
        v_opt_buf_switch=v_opt_buf_switch,
        ratio=ratio(v_opt_true, v_alg),
        f_eta=smoothness_bound(eta, v_alg, rho, beta),
        flag_a=flag_a,
        flag_b=flag_b,
        flag_c=flag_c,
        flag_d=flag_d,
        beta=beta,
        **extra,
    )
