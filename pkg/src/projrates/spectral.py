"""Convergence analysis for powers of real square matrices.

The central question: does ``A^k`` approach a limit as ``k`` grows, and if
so, how fast?  Powers converge exactly when the spectrum sits strictly
inside the unit circle, except possibly for a semisimple eigenvalue at 1.
The limit is then the (generally oblique) projector onto ``ker(A - I)``
along ``ran(A - I)``, and the linear rate is governed by the subdominant
modulus: the largest eigenvalue modulus once the eigenvalue 1 is removed.
That modulus is the best possible rate exactly when every eigenvalue
attaining it is semisimple; a Jordan block there forces an extra
polynomial factor ``k^(index-1)`` in front of the geometric decay.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

EPS = float(np.finfo(float).eps)


class SpectralError(ValueError):
    """Raised when the spectral structure cannot be resolved reliably."""


class NotConvergentError(SpectralError):
    """Raised when an operation requires convergent powers but A has none."""


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class EigenCluster:
    """One numerically clustered eigenvalue of a real matrix.

    ``value`` is the cluster representative (the mean of the clustered
    eigenvalues, projected to the real axis when its imaginary part is
    below the clustering tolerance).  ``index`` is the size of the largest
    Jordan block: the smallest k with rank((A - value*I)^k) stationary.
    """

    value: complex
    modulus: float
    algebraic_multiplicity: int
    index: int
    semisimple: bool


@dataclass(frozen=True)
class EigenStructure:
    clusters: tuple[EigenCluster, ...]
    cluster_tol: float
    rank_tol_policy: str


@dataclass(frozen=True)
class ConvergenceReport:
    """Outcome of the power-convergence classification.

    ``gamma`` is the subdominant modulus (0 when the spectrum is {1} or
    empty of non-unit values).  ``optimal_rate_attained`` records whether
    every cluster at modulus ``gamma`` is semisimple, i.e. whether
    ``gamma^k`` alone (no polynomial factor) bounds ``||A^k - limit||``.
    """

    status: str  # 'convergent' | 'not_convergent'
    limit: np.ndarray | None
    spectral_radius: float
    gamma: float
    subdominant_clusters: tuple[EigenCluster, ...]
    optimal_rate_attained: bool
    limit_is_orthogonal_projector: bool
    warnings: tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# helpers


def operator_norm(a: np.ndarray) -> float:
    """Largest singular value."""
    return float(np.linalg.norm(a, 2))


def default_cluster_tol(a: np.ndarray) -> float:
    return 1e-7 * max(1.0, operator_norm(a))


def default_rank_tol(n: int) -> float:
    return 100 * n * EPS


def _check_square(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


def _cluster_indices(values: np.ndarray, tol: float) -> list[list[int]]:
    """Single-linkage grouping of complex values at distance <= tol."""
    m = len(values)
    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(m):
        for j in range(i + 1, m):
            if abs(values[i] - values[j]) <= tol:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    groups: dict[int, list[int]] = {}
    for i in range(m):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _numerical_rank(m: np.ndarray, tol: float) -> int:
    s = np.linalg.svd(m, compute_uv=False)
    return int(np.count_nonzero(s > tol))


def _cluster_index(a: np.ndarray, value: complex, mult: int, rank_tol: float) -> int:
    """Smallest k with rank((A - value*I)^k) = n - mult."""
    n = a.shape[0]
    b = a.astype(complex) - value * np.eye(n)
    smax = operator_norm(b)
    if smax == 0.0:
        return 1  # A is value*I
    bk = np.eye(n, dtype=complex)
    for k in range(1, mult + 1):
        bk = bk @ b
        # threshold at the natural scale of the k-th power; rounding noise in
        # B^k sits near eps * ||B||^k, not near eps * sigma_max(B^k)
        r = _numerical_rank(bk, rank_tol * smax**k)
        if r == n - mult:
            return k
        if r < n - mult:
            raise SpectralError(
                f"rank of (A - ({value})I)^{k} fell below n - multiplicity "
                f"({r} < {n - mult}); eigenvalue clusters too close for a "
                "reliable Jordan index"
            )
    raise SpectralError(
        f"rank of powers of A - ({value})I did not stabilize within the "
        f"algebraic multiplicity {mult}; eigenvalue clusters too close"
    )


def _min_cluster_gap(reps: list[complex]) -> float:
    gaps = [abs(x - y) for i, x in enumerate(reps) for y in reps[i + 1 :]]
    return min(gaps) if gaps else float("inf")


# ---------------------------------------------------------------------------
# eigen structure


def eigen_structure(
    a: np.ndarray,
    cluster_tol: float | None = None,
    rank_tol: float | None = None,
) -> EigenStructure:
    """Cluster the spectrum of a real square matrix and resolve Jordan indices.

    Eigenvalues within ``cluster_tol`` of each other (single linkage) are
    treated as one eigenvalue, represented by their mean; means with
    ``|Im| <= cluster_tol`` are projected onto the real axis.  The index of
    each cluster comes from rank stabilization of powers of ``A - value*I``,
    with numerical ranks thresholded at ``rank_tol * ||A - value*I||^k``.

    Parameters
    ----------
    a : (n, n) array
    cluster_tol : float, optional
        Defaults to ``1e-7 * max(1, ||A||)``.
    rank_tol : float, optional
        Relative rank threshold, defaults to ``100 * n * eps``: enough
        headroom over eigensolver rounding in the cluster representative,
        still orders of magnitude below the cluster separation scale.
    """
    a = _check_square(a)
    n = a.shape[0]
    if cluster_tol is None:
        cluster_tol = default_cluster_tol(a)
    if rank_tol is None:
        rank_tol = default_rank_tol(n)
    if cluster_tol <= 0 or rank_tol <= 0:
        raise ValueError("tolerances must be positive")

    eigvals = np.linalg.eigvals(a)
    groups = _cluster_indices(eigvals, cluster_tol)
    reps: list[complex] = []
    mults: list[int] = []
    for idx in groups:
        rep = complex(np.mean(eigvals[idx]))
        if abs(rep.imag) <= cluster_tol:
            rep = complex(rep.real, 0.0)
        reps.append(rep)
        mults.append(len(idx))

    if _min_cluster_gap(reps) <= cluster_tol:
        raise SpectralError(
            "cluster representatives are not separated by more than "
            f"cluster_tol={cluster_tol:.3e} (min gap {_min_cluster_gap(reps):.3e})"
        )

    # real input: complex clusters come in conjugate pairs sharing one index
    order = sorted(range(len(reps)), key=lambda i: (-abs(reps[i]), -reps[i].real, -reps[i].imag))
    indices: dict[int, int] = {}
    for i in order:
        if i in indices:
            continue
        k = _cluster_index(a, reps[i], mults[i], rank_tol)
        indices[i] = k
        if reps[i].imag != 0.0:
            partner = [
                j
                for j in range(len(reps))
                if j != i and abs(reps[j] - reps[i].conjugate()) <= cluster_tol
            ]
            if len(partner) != 1 or mults[partner[0]] != mults[i]:
                raise SpectralError(
                    f"complex cluster {reps[i]} lacks a matching conjugate partner"
                )
            indices[partner[0]] = k

    clusters = tuple(
        EigenCluster(
            value=reps[i],
            modulus=abs(reps[i]),
            algebraic_multiplicity=mults[i],
            index=indices[i],
            semisimple=indices[i] == 1,
        )
        for i in order
    )
    policy = f"sigma > rank_tol * ||A - value*I||^k with rank_tol = {rank_tol:.6e}"
    return EigenStructure(clusters=clusters, cluster_tol=cluster_tol, rank_tol_policy=policy)


def spectral_radius(a: np.ndarray) -> float:
    a = _check_square(a)
    return float(np.max(np.abs(np.linalg.eigvals(a))))


def _unit_cluster(struct: EigenStructure) -> EigenCluster | None:
    for c in struct.clusters:
        if abs(c.value - 1.0) <= struct.cluster_tol:
            return c
    return None


def _gamma(struct: EigenStructure) -> tuple[float, tuple[EigenCluster, ...]]:
    """Subdominant modulus and the clusters attaining it."""
    unit = _unit_cluster(struct)
    rest = [c for c in struct.clusters if c is not unit]
    if not rest:
        return 0.0, ()
    gamma = max(c.modulus for c in rest)
    attaining = tuple(c for c in rest if abs(c.modulus - gamma) <= struct.cluster_tol)
    return gamma, attaining


def subdominant_modulus(
    a: np.ndarray,
    cluster_tol: float | None = None,
    rank_tol: float | None = None,
) -> float:
    """Largest eigenvalue modulus after removing the eigenvalue 1 (0 if none)."""
    gamma, _ = _gamma(eigen_structure(a, cluster_tol, rank_tol))
    return gamma


# ---------------------------------------------------------------------------
# limits


def _projector_onto_kernel_along_range(b: np.ndarray, kdim: int, abs_tol: float) -> np.ndarray:
    """Projector onto ker(b) along ran(b); requires the two to be complementary.

    ``abs_tol`` is the absolute singular-value cutoff separating ran(b)
    from ker(b); callers scale it to the natural magnitude of b.
    """
    n = b.shape[0]
    u, s, vh = np.linalg.svd(b)
    r = int(np.count_nonzero(s > abs_tol))
    if n - r != kdim:
        raise SpectralError(
            f"kernel dimension {n - r} does not match the algebraic multiplicity "
            f"{kdim}; spectrum too poorly separated for a reliable projector"
        )
    kernel = vh[r:].conj().T  # columns span ker(b)
    ran = u[:, :r]  # columns span ran(b)
    basis = np.hstack([kernel, ran])
    target = np.hstack([kernel, np.zeros((n, r), dtype=basis.dtype)])
    # P maps the kernel part to itself and the range part to zero
    proj = np.linalg.solve(basis.T, target.T).T
    return proj


def classify_convergence(
    a: np.ndarray,
    cluster_tol: float | None = None,
    rank_tol: float | None = None,
    tol_circle: float = 1e-7,
) -> ConvergenceReport:
    """Decide whether A^k converges, and package limit, rate, and optimality.

    Convergent means: spectral radius < 1, or radius 1 attained only by a
    semisimple eigenvalue exactly equal to 1.  A modulus within
    ``tol_circle`` of 1 whose value differs from 1 is classified as not
    convergent and flagged as borderline, since no finite computation can
    settle that case.
    """
    a = _check_square(a)
    n = a.shape[0]
    struct = eigen_structure(a, cluster_tol, rank_tol)
    rho = max(c.modulus for c in struct.clusters)
    gamma, attaining = _gamma(struct)
    unit = _unit_cluster(struct)
    on_circle = [c for c in struct.clusters if abs(c.modulus - 1.0) <= tol_circle]
    bad_circle = [c for c in on_circle if c is not unit]

    notes: list[str] = []
    convergent = False
    if bad_circle:
        for c in bad_circle:
            notes.append(
                f"borderline: |{c.value}| = {c.modulus:.12g} lies within "
                f"tol_circle={tol_circle:g} of 1 but the value is not 1"
            )
    elif rho > 1.0 + tol_circle:
        pass  # strictly expanding somewhere
    elif unit is not None and on_circle:
        convergent = unit.semisimple
        if not unit.semisimple:
            notes.append("eigenvalue 1 is defective (index > 1), powers do not converge")
    else:
        # remaining case: every modulus < 1 - tol_circle
        convergent = rho < 1.0 - tol_circle

    limit = None
    is_orth = False
    if convergent:
        if unit is not None and on_circle:
            rt = default_rank_tol(n) if rank_tol is None else rank_tol
            b = a - np.eye(n)
            try:
                limit = _projector_onto_kernel_along_range(
                    b, unit.algebraic_multiplicity, rt * operator_norm(b)
                )
            except SpectralError as exc:
                # an eigenvalue clustered at 1 whose kernel does not show up
                # at the rank tolerance: numerically indistinguishable from a
                # modulus just inside the circle, so refuse to classify it
                convergent = False
                notes.append(f"borderline: {exc}")
            else:
                limit = np.asarray(limit, dtype=float)
        else:
            limit = np.zeros((n, n))
    if not convergent:
        limit = None
    if limit is not None:
        scale = max(1.0, operator_norm(limit))
        is_orth = (
            operator_norm(limit - limit.T) <= 1e-9 * scale
            and operator_norm(limit @ limit - limit) <= 1e-9 * scale
        )

    optimal = bool(attaining) and all(c.semisimple for c in attaining)
    if not attaining:
        optimal = True  # spectrum is {1}: powers are eventually constant

    return ConvergenceReport(
        status="convergent" if convergent else "not_convergent",
        limit=limit,
        spectral_radius=rho,
        gamma=gamma,
        subdominant_clusters=attaining,
        optimal_rate_attained=optimal if convergent else False,
        limit_is_orthogonal_projector=is_orth,
        warnings=tuple(notes),
    )


def power_limit(
    a: np.ndarray,
    cluster_tol: float | None = None,
    rank_tol: float | None = None,
    tol_circle: float = 1e-7,
) -> np.ndarray:
    """Limit of A^k for a convergent matrix; raises NotConvergentError otherwise.

    Computed from the invariant-subspace bases of ``A - I`` (kernel and
    range), never by powering A.
    """
    report = classify_convergence(a, cluster_tol, rank_tol, tol_circle)
    if report.status != "convergent":
        raise NotConvergentError(
            "powers of A do not converge: " + "; ".join(report.warnings or ("spectrum outside the convergent region",))
        )
    return report.limit


def spectral_projectors(
    a: np.ndarray,
    cluster_tol: float | None = None,
    rank_tol: float | None = None,
) -> list[tuple[EigenCluster, np.ndarray]]:
    """Spectral projector of every eigen cluster.

    For a cluster at value v with index k, the projector maps onto
    ``ker((A - vI)^k)`` along ``ran((A - vI)^k)``.  Projectors of complex
    clusters are complex; they sum to the identity, annihilate each other,
    and commute with A.
    """
    a = _check_square(a)
    n = a.shape[0]
    struct = eigen_structure(a, cluster_tol, rank_tol)
    rt = default_rank_tol(n) if rank_tol is None else rank_tol
    out = []
    for c in struct.clusters:
        b = a.astype(complex) - c.value * np.eye(n)
        bk = np.linalg.matrix_power(b, c.index)
        # cutoff at the power's natural scale ||B||^k, matching the index search
        abs_tol = rt * operator_norm(b) ** c.index
        try:
            proj = _projector_onto_kernel_along_range(bk, c.algebraic_multiplicity, abs_tol)
        except SpectralError as exc:
            gap = _min_cluster_gap([cc.value for cc in struct.clusters])
            raise SpectralError(f"{exc} (smallest cluster gap: {gap:.3e})") from None
        out.append((c, proj))
    return out


# ---------------------------------------------------------------------------
# empirical rate


def empirical_rate(
    a: np.ndarray,
    a_inf: np.ndarray,
    k_min: int | None = None,
    k_max: int = 60,
    floor: float = 1e-13,
) -> float:
    """Least-squares geometric rate fitted to ``||A^k - A_inf||`` over a window.

    Powers are formed by repeated multiplication and residual norms below
    ``floor`` are dropped (they sit in rounding noise and would flatten the
    fit).  The window defaults to ``k_min = max(5, k_max // 4)``.
    """
    a = _check_square(a)
    a_inf = np.asarray(a_inf, dtype=float)
    if a_inf.shape != a.shape:
        raise ValueError("limit shape does not match the matrix")
    if k_min is None:
        k_min = max(5, k_max // 4)
    if not (1 <= k_min < k_max):
        raise ValueError("need 1 <= k_min < k_max")

    ks, residuals = [], []
    power = np.eye(a.shape[0])
    dropped = 0
    for k in range(1, k_max + 1):
        power = power @ a
        if k < k_min:
            continue
        r = operator_norm(power - a_inf)
        if r <= floor:
            dropped += 1
            continue
        ks.append(k)
        residuals.append(r)
    if dropped:
        warnings.warn(
            f"empirical_rate: dropped {dropped} residuals at or below the "
            f"floor {floor:g}",
            stacklevel=2,
        )
    if len(ks) < 3:
        raise SpectralError(
            f"only {len(ks)} usable residuals in [{k_min}, {k_max}]; "
            "window too short or residuals underflow"
        )
    slope = np.polyfit(np.asarray(ks, dtype=float), np.log(residuals), 1)[0]
    return float(np.exp(slope))


# ---------------------------------------------------------------------------
# serialization


def _complex_to_json(z: complex) -> dict:
    return {"re": float(z.real), "im": float(z.imag)}


def _cluster_to_json(c: EigenCluster) -> dict:
    return {
        "value": _complex_to_json(c.value),
        "modulus": c.modulus,
        "algebraic_multiplicity": c.algebraic_multiplicity,
        "index": c.index,
        "semisimple": c.semisimple,
    }


def _cluster_from_json(d: dict) -> EigenCluster:
    return EigenCluster(
        value=complex(d["value"]["re"], d["value"]["im"]),
        modulus=float(d["modulus"]),
        algebraic_multiplicity=int(d["algebraic_multiplicity"]),
        index=int(d["index"]),
        semisimple=bool(d["semisimple"]),
    )


def report_to_dict(report: ConvergenceReport) -> dict:
    return {
        "status": report.status,
        "limit": None if report.limit is None else report.limit.tolist(),
        "spectral_radius": report.spectral_radius,
        "gamma": report.gamma,
        "subdominant_clusters": [_cluster_to_json(c) for c in report.subdominant_clusters],
        "optimal_rate_attained": report.optimal_rate_attained,
        "limit_is_orthogonal_projector": report.limit_is_orthogonal_projector,
        "warnings": list(report.warnings),
    }


def report_from_dict(d: dict) -> ConvergenceReport:
    return ConvergenceReport(
        status=str(d["status"]),
        limit=None if d["limit"] is None else np.asarray(d["limit"], dtype=float),
        spectral_radius=float(d["spectral_radius"]),
        gamma=float(d["gamma"]),
        subdominant_clusters=tuple(_cluster_from_json(c) for c in d["subdominant_clusters"]),
        optimal_rate_attained=bool(d["optimal_rate_attained"]),
        limit_is_orthogonal_projector=bool(d["limit_is_orthogonal_projector"]),
        warnings=tuple(d.get("warnings", ())),
    )
