"""
QBC4 Simulator - Concealing Analyzer
====================================

Checks that Babe's view before opening does not depend on the committed bit:
- evidence_state:           Tr_A of the committed state for fixed bases
                            (classical mode: averaged over Adam's hidden labels)
- purified_evidence_state:  same, with Babe's basis choice purified into a C register
- product_form_check:       distance from I_alpha/4 (x) Tr_alpha(rho)
- concealing_sweep:         all of the above over listed and random ensembles
"""
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .ensembles import BasisEnsemble, Draw, haar_ensemble
from .quantum import (
    C,
    DensityOperator,
    HilbertRegistry,
    Party,
    PureState,
    haar_matrix,
    partial_trace,
    permute,
    spawn_seeds,
    tensor,
    trace_distance,
)
from .protocol import CommitMode, babe_ids, commit_transform, committed_state, prepared_state
from .reports import ConcealingReport, EnsembleConcealing
from .settings import get_settings, tolerances
from .syslogger import log_function_call, syslog

logger = logging.getLogger("qbc4sim.concealing")


def _label_choices(mode: CommitMode) -> List[Optional[Tuple[int, int]]]:
    # classical commits are uniform over the 16 label pairs Babe has not seen yet
    if mode is CommitMode.CLASSICAL:
        return list(itertools.product(range(4), repeat=2))
    return [None]


def _average(states: Sequence[DensityOperator]) -> DensityOperator:
    if len(states) == 1:
        return states[0]
    matrix = sum(rho.matrix for rho in states) / len(states)
    return DensityOperator(states[0].registry, matrix)


def evidence_state(ensemble: BasisEnsemble, draw: Draw, b: int, corrupt: bool = False,
                   mode: CommitMode = CommitMode.QUANTUM) -> DensityOperator:
    """Babe's reduced state on H^B for fixed basis indices."""
    f_mu, f_nu = ensemble.bases_for(draw)
    return _average([
        partial_trace(committed_state(f_mu, f_nu, b, choices=c, corrupt=corrupt), babe_ids())
        for c in _label_choices(mode)
    ])


def purified_prepared_state(ensemble: BasisEnsemble) -> PureState:
    """sum_n sqrt(q_n) |g^n>_C (x) |Psi^n_mu>|Psi^n_nu> with one C factor of dimension m_mu*m_nu"""
    draws = ensemble.joint_draws()
    c_registry = HilbertRegistry(((C(), len(draws)),))
    vec = None
    for idx, (draw, q) in enumerate(draws):
        g = np.zeros(len(draws), dtype=np.complex128)
        g[idx] = np.sqrt(q)
        f_mu, f_nu = ensemble.bases_for(draw)
        term = np.kron(g, prepared_state(f_mu, f_nu).amplitudes)
        vec = term if vec is None else vec + term
    babe_registry = HilbertRegistry.of(*babe_ids())
    return PureState(c_registry.concat(babe_registry), vec)


def purified_evidence_state(ensemble: BasisEnsemble, b: int, corrupt: bool = False,
                            mode: CommitMode = CommitMode.QUANTUM) -> DensityOperator:
    """Babe's reduced state on H^B (x) H^C when her basis choice is purified."""
    prepared = purified_prepared_state(ensemble)
    reduced = []
    for c in _label_choices(mode):
        committed = commit_transform(prepared, b, choices=c, corrupt=corrupt)
        keep = [sid for sid in committed.registry.ids if sid.party is not Party.A]
        reduced.append(partial_trace(committed, keep))
    return _average(reduced)


def product_form_check(rho: DensityOperator) -> float:
    """Trace distance between rho and I_alpha/4 (x) Tr_alpha(rho), in rho's factor order."""
    registry = rho.registry
    alphas = [sid for sid in registry.ids if sid.party is Party.B_ALPHA]
    rest = [sid for sid in registry.ids if sid.party is not Party.B_ALPHA]
    if not alphas:
        return 0.0
    mixed = DensityOperator.maximally_mixed(registry.subset(alphas))
    if rest:
        product = tensor(mixed, partial_trace(rho, rest))
    else:
        product = mixed
    return trace_distance(rho, permute(product, registry.ids))


def _ensemble_row(ensemble: BasisEnsemble, purify: bool, corrupt: bool,
                  mode: CommitMode) -> EnsembleConcealing:
    flat = DensityOperator.maximally_mixed(HilbertRegistry.of(*babe_ids()))
    distance_b = 0.0
    distance_mixed = 0.0
    for draw, _ in ensemble.joint_draws():
        rho0 = evidence_state(ensemble, draw, 0, corrupt, mode)
        rho1 = evidence_state(ensemble, draw, 1, corrupt, mode)
        distance_b = max(distance_b, trace_distance(rho0, rho1))
        distance_mixed = max(distance_mixed, trace_distance(rho0, flat),
                             trace_distance(rho1, flat))

    purified_distance = residual = None
    if purify:
        rho0 = purified_evidence_state(ensemble, 0, corrupt, mode)
        rho1 = purified_evidence_state(ensemble, 1, corrupt, mode)
        purified_distance = trace_distance(rho0, rho1)
        residual = max(product_form_check(rho0), product_form_check(rho1))

    return EnsembleConcealing(
        name=ensemble.name,
        m_mu=ensemble.mu.m,
        m_nu=ensemble.nu.m,
        distance_b=distance_b,
        distance_to_mixed=distance_mixed,
        purified_distance=purified_distance,
        product_residual=residual,
    )


def _max_of(values: Sequence[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return max(present) if present else None


@log_function_call
def concealing_sweep(ensembles: Sequence[BasisEnsemble], seed: int, samples: int = 100,
                     purify: bool = False, purified_samples: int = 20,
                     corrupt: bool = False, workers: Optional[int] = None,
                     mode: CommitMode = CommitMode.QUANTUM) -> ConcealingReport:
    """Evaluate the listed ensembles plus random ones and report the maxima.

    The random part consists of `samples` Haar-random known basis pairs and,
    with purify, `purified_samples` Haar ensembles with m cycling through 1..4.
    """
    workers = workers or get_settings().optimizer.workers
    basis_seeds = spawn_seeds(seed, samples + purified_samples) if samples + purified_samples else []

    jobs: List[Tuple[BasisEnsemble, bool]] = [(e, purify) for e in ensembles]
    for k in range(samples):
        rng = np.random.default_rng(basis_seeds[k])
        jobs.append((BasisEnsemble.single(haar_matrix(2, rng), haar_matrix(2, rng), f"random-{k}"), False))
    if purify:
        for k in range(purified_samples):
            m = 1 + k % 4
            jobs.append((haar_ensemble(m, basis_seeds[samples + k], f"haar-{m}#{k}"), True))

    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(lambda job: _ensemble_row(job[0], job[1], corrupt, mode), jobs))

    tol = tolerances().structural
    max_b = max((r.distance_b for r in rows), default=0.0)
    max_mixed = max((r.distance_to_mixed for r in rows), default=0.0)
    max_purified = _max_of([r.purified_distance for r in rows])
    max_residual = _max_of([r.product_residual for r in rows])
    claims_hold = max_b <= tol and max_mixed <= tol
    if purify:
        claims_hold = claims_hold and (max_purified or 0.0) <= tol and (max_residual or 0.0) <= tol

    syslog.metric("concealing.max_distance_b", max_b,
                  tags={"samples": samples, "corrupt": corrupt, "mode": mode.value})
    if purify:
        syslog.metric("concealing.max_purified_distance", max_purified)
    logger.info(f"Concealing sweep over {len(rows)} ensemble(s): max distance {max_b:.3g}, "
                f"claims {'hold' if claims_hold else 'violated'}")

    return ConcealingReport(
        seed=seed,
        samples=samples,
        corrupt=corrupt,
        mode=mode.value,
        purified=purify,
        ensembles=rows,
        max_distance_b=max_b,
        max_distance_to_mixed=max_mixed,
        max_purified_distance=max_purified,
        max_product_residual=max_residual,
        claims_hold=claims_hold,
    )
