"""Monte Carlo over the weighted measures v_lambda on the Lie ball.

Points are drawn uniformly from the domain by rejection from the unit ball of
C^n = R^{2n}. Every integral against v_lambda is a self-normalised ratio with
weights Delta(z)^(lambda - n), so the normalising constant never appears.

Reductions run chunk by chunk in a fixed order, which makes every result
bit-reproducible for a given (n, lambda, samples, seed, chunk).
"""
from __future__ import annotations

import hashlib
import json
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .actions import GroupElement, act
from .errors import IllConditioned, LabWarning, SamplingStall, UnsupportedLambda
from .geometry import WeightParam, delta, in_domain
from .polyspaces import (
    Polynomial,
    WeightLabel,
    act_on_poly,
    coefficient_matrix,
    evaluate_many,
    grlex_key,
    harmonic_basis,
    highest_weight_vector,
    monomials,
    q_basis,
)
from .symbols import eval_symbol as _eval_spec
from .symbols import format_symbol, is_invariant_kind

BASIS_VERSION = 1
MAX_N = 10
_STALL_ROUNDS = 10_000


# ---------------------------------------------------------------- parameters and samples


@dataclass(frozen=True)
class MCParams:
    n: int
    lam: float
    samples: int
    seed: int = 0
    chunk: int = 1 << 16
    force: bool = False

    def __post_init__(self):
        lam = self.lam.lam if isinstance(self.lam, WeightParam) else float(self.lam)
        object.__setattr__(self, "lam", lam)
        WeightParam(lam, self.n)
        if self.n < 2:
            raise UnsupportedLambda(f"n = {self.n} is below the supported range")
        if self.samples < 1 or self.chunk < 1:
            raise ValueError("samples and chunk must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if lam <= self.n - 0.5:
            msg = (
                f"lambda = {lam} <= n - 1/2 = {self.n - 0.5}: the weight Delta^(lambda-n) has "
                "infinite variance under uniform sampling"
            )
            if not self.force:
                raise UnsupportedLambda(msg + "; use the quadrature oracle or force=True")
            warnings.warn(msg + "; Monte Carlo error bars are unreliable", LabWarning, stacklevel=2)
        if self.n > MAX_N:
            warnings.warn(f"n = {self.n} exceeds the supported envelope n <= {MAX_N}", LabWarning, stacklevel=2)

    @property
    def weight(self) -> WeightParam:
        return WeightParam(self.lam, self.n)

    def key(self) -> dict:
        return {"n": self.n, "lambda": self.lam, "samples": self.samples, "seed": self.seed, "chunk": self.chunk}


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Accepted points (samples, n), their weights Delta^(lambda-n), and chunk boundaries."""

    params: MCParams
    z: np.ndarray
    weights: np.ndarray
    bounds: tuple
    attempts: int
    _digest: list = field(default_factory=list, repr=False)

    def __len__(self):
        return self.z.shape[0]

    @property
    def acceptance(self) -> float:
        return len(self) / self.attempts

    def chunks(self):
        for lo, hi in self.bounds:
            yield self.z[lo:hi], self.weights[lo:hi]

    def digest(self) -> str:
        if not self._digest:
            self._digest.append(hashlib.sha256(np.ascontiguousarray(self.z).tobytes()).hexdigest())
        return self._digest[0]


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def _sample_chunk(n: int, size: int, rng: np.random.Generator):
    """First ``size`` accepted draws from one stream, and the number of draws that took."""
    got, parts, masks = 0, [], []
    batch = max(64, int(size * 1.25 / _acceptance_guess(n)))
    for _ in range(_STALL_ROUNDS):
        g = rng.standard_normal((batch, 2 * n))
        g /= np.linalg.norm(g, axis=1)[:, None]
        g *= rng.random(batch)[:, None] ** (1.0 / (2 * n))
        z = g[:, :n] + 1j * g[:, n:]
        ok = in_domain(z)
        parts.append(z[ok])
        masks.append(ok)
        got += int(ok.sum())
        if got >= size:
            break
    else:
        raise SamplingStall(f"only {got} of {size} points accepted after {_STALL_ROUNDS} rounds")
    attempts = int(np.flatnonzero(np.concatenate(masks))[size - 1]) + 1
    return np.concatenate(parts)[:size], attempts


def _acceptance_guess(n: int) -> float:
    # rough volume ratio, only used to size batches
    return max(0.02, 0.75 ** (n - 2))


def sample_domain(params: MCParams) -> SampleSet:
    """Uniform points in the domain, deterministic in (seed, chunk)."""
    n, N, C = params.n, params.samples, params.chunk
    parts, bounds, attempts = [], [], 0
    for c, lo in enumerate(range(0, N, C)):
        size = min(C, N - lo)
        z, tried = _sample_chunk(n, size, _chunk_rng(params.seed, c))
        parts.append(z)
        bounds.append((lo, lo + size))
        attempts += tried
    z = np.concatenate(parts)
    z.setflags(write=False)
    w = delta(z) ** (params.lam - n)
    w.setflags(write=False)
    return SampleSet(params, z, w, tuple(bounds), attempts)


def _samples(params, samples):
    if samples is None:
        return sample_domain(params)
    if samples.params != params:
        raise ValueError("sample set was drawn with different parameters")
    return samples


# ---------------------------------------------------------------- scalar estimators


def _ratio(values, weights_chunks):
    """Chunked self-normalised ratio: sum w h / sum w, and its delta-method stderr."""
    sw = np.array([np.sum(w) for w in weights_chunks]).sum()
    # real and imaginary parts summed like the weights, so h = 1 gives exactly 1
    num_re = np.array([np.sum(w * np.real(h)) for h, w in zip(values, weights_chunks)]).sum()
    num_im = np.array([np.sum(w * np.imag(h)) for h, w in zip(values, weights_chunks)]).sum()
    num = complex(num_re, num_im) if np.iscomplexobj(values[0]) else num_re
    r = num / sw
    var = np.array([np.sum(w * w * np.abs(h - r) ** 2) for h, w in zip(values, weights_chunks)]).sum()
    return r, float(np.sqrt(var)) / float(sw)


def weighted_mean(h, params: MCParams, samples: SampleSet | None = None):
    """Estimate of the v_lambda-integral of h; ``h`` maps a batch (m, n) to values (m,)."""
    s = _samples(params, samples)
    vals, ws = [], []
    for z, w in s.chunks():
        vals.append(np.broadcast_to(np.asarray(h(z), dtype=complex), w.shape))
        ws.append(w)
    r, err = _ratio(vals, ws)
    return complex(r), err


def inner_product(p: Polynomial, q: Polynomial, params: MCParams, samples: SampleSet | None = None):
    """<p, q> = integral of p conj(q) dv_lambda."""

    def h(z):
        v = evaluate_many([p, q], z)
        return v[:, 0] * np.conj(v[:, 1])

    return weighted_mean(h, params, samples)


def _ratio_weighted(values, weights_chunks, extra_chunks):
    """Ratio with per-sample weights w * extra, where ``extra`` is e.g. |h|^2."""
    return _ratio(values, [w * e for w, e in zip(weights_chunks, extra_chunks)])


def rayleigh_eigenvalue(spec, k1: int, k2: int, params: MCParams, samples: SampleSet | None = None):
    """<a h, h> / <h, h> for h the highest weight vector of block (k1, k2), one shared sample set."""
    if not is_invariant_kind(spec):
        raise TypeError("rayleigh_eigenvalue needs a moment or invariant symbol")
    s = _samples(params, samples)
    h = highest_weight_vector(k1, k2, params.n)
    vals, ws, extra = [], [], []
    for z, w in s.chunks():
        vals.append(np.asarray(eval_symbol(spec, z), dtype=float))
        extra.append(np.abs(evaluate_many([h], z)[:, 0]) ** 2)
        ws.append(w)
    r, err = _ratio_weighted(vals, ws, extra)
    return float(np.real(r)), err


def normalization_estimate(params: MCParams, samples: SampleSet | None = None) -> float:
    """Diagnostic c_lambda relative to the uniform probability on the domain: 1 / E[Delta^(lambda-n)]."""
    s = _samples(params, samples)
    return 1.0 / float(np.mean(s.weights))


# ---------------------------------------------------------------- moment accumulators


class _Moments:
    """Chunk-folded S = sum w f conj(v)^T v-type matrices for ratio estimates with stderr.

    For value rows V (m, D) and symbol values a (m,), accumulates
    M_ab = sum w a conj(V_a) V_b / sum w, plus what is needed for the per-entry
    delta-method variance sum w^2 |a conj(V_a) V_b - M_ab|^2 / (sum w)^2.
    """

    def __init__(self, D):
        self.sw = 0.0
        self.sw2 = 0.0
        self.S1 = np.zeros((D, D), dtype=complex)
        self.S2 = np.zeros((D, D), dtype=complex)
        self.S4 = np.zeros((D, D))

    def add(self, V, w, a=None):
        a = np.ones_like(w) if a is None else a
        self.sw += float(np.sum(w))
        self.sw2 += float(np.sum(w * w))
        Vc = np.conj(V)
        self.S1 += (Vc * (w * a)[:, None]).T @ V
        self.S2 += (Vc * (w * w * a)[:, None]).T @ V
        A2 = np.abs(V) ** 2
        self.S4 += (A2 * (np.abs(w * a) ** 2)[:, None]).T @ A2

    def result(self):
        M = self.S1 / self.sw
        var = self.S4 - 2.0 * np.real(np.conj(M) * self.S2) + np.abs(M) ** 2 * self.sw2
        return M, np.sqrt(np.clip(var, 0.0, None)) / self.sw


# ---------------------------------------------------------------- Gram matrices


@dataclass(frozen=True, eq=False)
class GramBlock:
    label: WeightLabel
    polynomials: tuple
    matrix: np.ndarray
    stderr: np.ndarray


def _gram_key(params: MCParams, degree_max: int) -> str:
    payload = json.dumps({**params.key(), "degree_max": degree_max, "basis_version": BASIS_VERSION}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:32]


def cache_directory(cache_dir=None):
    d = cache_dir or os.environ.get("TOEPLITZ_LAB_CACHE")
    return os.fspath(d) if d else None


def _pivot_check(G, what):
    d = np.linalg.eigvalsh(G) if G.shape[0] > 1 else np.real(np.diag(G))
    if d.min() <= 0:
        raise IllConditioned(f"Gram matrix of {what} is not positive definite (min eigenvalue {d.min():.3e})")
    L = np.linalg.cholesky(G)
    piv = np.abs(np.diag(L)) ** 2
    if piv.min() < 1e-8 * piv.max():
        warnings.warn(
            f"ILL_CONDITIONED: Cholesky pivot ratio {piv.min() / piv.max():.2e} for {what}", LabWarning, stacklevel=3
        )
    return L


def _hermitian(M):
    return (M + M.conj().T) / 2


def _q_classes(n, degree_max):
    classes = {}
    for m in range(degree_max + 1):
        for q, label in q_basis(n, m):
            classes.setdefault(label, []).append(q)
    return classes


def gram_blocks(degree_max: int, params: MCParams, samples: SampleSet | None = None, cache_dir=None):
    """Gram matrices of the q-basis within each (torus weight, degree) class.

    Returns (blocks, gauge): ``blocks`` maps WeightLabel to GramBlock; ``gauge``
    holds the mean and max of |<q_i, q_j>| / stderr over cross-class pairs of
    equal degree, which vanish exactly in the continuum.
    """
    s = _samples(params, samples)
    classes = _q_classes(params.n, degree_max)
    labels = sorted(classes, key=lambda l: (-l.so2_weight, l.torus_weight))
    directory = cache_directory(cache_dir)
    path = os.path.join(directory, f"gram-{_gram_key(params, degree_max)}.json") if directory else None
    if path and os.path.exists(path):
        with open(path) as fh:
            data = json.load(fh)
        if data.get("digest") == s.digest():
            blocks = {}
            for entry in data["blocks"]:
                label = WeightLabel(tuple(entry["torus_weight"]), entry["so2_weight"])
                M = np.array(entry["re"]) + 1j * np.array(entry["im"])
                blocks[label] = GramBlock(label, tuple(classes[label]), M, np.array(entry["stderr"]))
            return blocks, data["gauge"]

    polys = [q for l in labels for q in classes[l]]
    owner = np.array([i for i, l in enumerate(labels) for _ in classes[l]])
    acc = _Moments(len(polys))
    for z, w in s.chunks():
        acc.add(evaluate_many(polys, z), w)
    M, err = acc.result()

    blocks = {}
    for i, l in enumerate(labels):
        idx = np.flatnonzero(owner == i)
        G = _hermitian(M[np.ix_(idx, idx)])
        _pivot_check(G, f"class {l}")
        blocks[l] = GramBlock(l, tuple(classes[l]), G, err[np.ix_(idx, idx)])

    deg = np.array([-labels[o].so2_weight for o in owner])
    cross = (owner[:, None] != owner[None, :]) & (deg[:, None] == deg[None, :])
    ratios = np.abs(M[cross]) / err[cross] if cross.any() else np.zeros(1)
    gauge = {"mean": float(np.mean(ratios)), "max": float(np.max(ratios)), "pairs": int(cross.sum())}

    if path:
        os.makedirs(directory, exist_ok=True)
        payload = {
            "key": {**params.key(), "degree_max": degree_max, "basis_version": BASIS_VERSION},
            "digest": s.digest(),
            "gauge": gauge,
            "blocks": [
                {
                    "torus_weight": list(b.label.torus_weight),
                    "so2_weight": b.label.so2_weight,
                    "re": b.matrix.real.tolist(),
                    "im": b.matrix.imag.tolist(),
                    "stderr": b.stderr.tolist(),
                }
                for b in blocks.values()
            ],
        }
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(payload, fh)
        os.replace(tmp, path)
    return blocks, gauge


# ---------------------------------------------------------------- truncated Toeplitz operators


@dataclass(frozen=True, eq=False)
class BasisBlock:
    label: tuple  # (k1, k2)
    polynomials: tuple

    @property
    def degree(self) -> int:
        return self.label[0] + 2 * self.label[1]

    def __len__(self):
        return len(self.polynomials)


def basis_blocks(n: int, degree_max: int) -> list:
    """Blocks H^k1 (z^T z)^k2 with k1 + 2 k2 <= degree_max, ordered by (degree, k1)."""
    labels = [(k1, k2) for k2 in range(degree_max // 2 + 1) for k1 in range(degree_max - 2 * k2 + 1)]
    labels.sort(key=lambda l: (l[0] + 2 * l[1], l[0]))
    zz = Polynomial.zz(n)
    return [BasisBlock(l, tuple(h * zz ** l[1] for h in harmonic_basis(n, l[0]))) for l in labels]


@dataclass(frozen=True, eq=False)
class OrthoBasis:
    """Per-block Cholesky orthonormalisation: e = V @ X with X block diagonal."""

    blocks: tuple
    polys: tuple
    X: np.ndarray
    Xinv: np.ndarray
    slices: tuple
    samples: SampleSet

    @property
    def dim(self) -> int:
        return self.X.shape[0]

    def values(self, z):
        return evaluate_many(list(self.polys), z) @ self.X


def orthonormal_basis(n: int, degree_max: int, params: MCParams, samples: SampleSet | None = None) -> OrthoBasis:
    s = _samples(params, samples)
    blocks = basis_blocks(n, degree_max)
    polys = [p for b in blocks for p in b.polynomials]
    slices, lo = [], 0
    for b in blocks:
        slices.append(slice(lo, lo + len(b)))
        lo += len(b)
    D = len(polys)
    acc = _Moments(D)
    for z, w in s.chunks():
        acc.add(evaluate_many(polys, z), w)
    M, _ = acc.result()
    X = np.zeros((D, D), dtype=complex)
    Xinv = np.zeros((D, D), dtype=complex)
    for b, sl in zip(blocks, slices):
        # <p_i, p_j> = sum w p_i conj(p_j): the accumulator gives conj(p_a) p_b, i.e. the transpose
        G = _hermitian(M[sl, sl]).T
        L = _pivot_check(G, f"block {b.label}")
        # e = p @ X orthonormal  <=>  X^T G conj(X) = I  <=>  X = L^{-T}
        Linv = np.linalg.inv(L)
        X[sl, sl] = Linv.T
        Xinv[sl, sl] = L.T
    return OrthoBasis(tuple(blocks), tuple(polys), X, Xinv, tuple(slices), s)


@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    """Matrix of T_a on the orthonormalised truncated basis: T e_b = sum_a entries[a, b] e_a."""

    blocks: tuple
    entries: np.ndarray
    stderr: np.ndarray
    meta: dict
    basis: OrthoBasis | None = None

    def block_slices(self):
        out, lo = [], 0
        for b in self.blocks:
            out.append(slice(lo, lo + len(b)))
            lo += len(b)
        return out

    def off_block_ratio(self) -> float:
        """max |entry| / stderr over entries coupling distinct blocks."""
        mask = np.ones(self.entries.shape, dtype=bool)
        for sl in self.block_slices():
            mask[sl, sl] = False
        if not mask.any():
            return 0.0
        return float(np.max(np.abs(self.entries[mask]) / self.stderr[mask]))

    def block_means(self) -> list:
        return [float(np.mean(np.real(np.diag(self.entries[sl, sl])))) for sl in self.block_slices()]

    def to_json(self) -> dict:
        return {
            "meta": self.meta,
            "blocks": [{"k1": b.label[0], "k2": b.label[1], "size": len(b)} for b in self.blocks],
            "re": self.entries.real.tolist(),
            "im": self.entries.imag.tolist(),
            "stderr": self.stderr.tolist(),
        }

    @classmethod
    def from_json(cls, data, n=None) -> "TruncatedOperator":
        n = n or data["meta"]["n"]
        by_label = {b.label: b for b in basis_blocks(n, max(b["k1"] + 2 * b["k2"] for b in data["blocks"]))}
        blocks = tuple(by_label[(b["k1"], b["k2"])] for b in data["blocks"])
        entries = np.array(data["re"]) + 1j * np.array(data["im"])
        return cls(blocks, entries, np.array(data["stderr"]), data["meta"])


def eval_symbol(spec, z):
    """Symbol values on a batch; a plain callable may stand in for a parsed symbol."""
    return spec(z) if callable(spec) else _eval_spec(spec, z)


def _symbol_text(spec) -> str:
    return getattr(spec, "__name__", "<callable>") if callable(spec) else format_symbol(spec)


def _symbol_chunks(spec, basis: OrthoBasis):
    for z, w in basis.samples.chunks():
        yield z, w, np.asarray(eval_symbol(spec, z)), basis.values(z)


def _matrix_of(spec, basis: OrthoBasis):
    acc = _Moments(basis.dim)
    for _, w, a, E in _symbol_chunks(spec, basis):
        acc.add(E, w, a)
    M, err = acc.result()
    # accumulator index order is [a, b] -> conj(e_a) e_b a, which is <a e_b, e_a>
    return M, err


def toeplitz_truncation(spec, degree_max: int, params: MCParams, samples: SampleSet | None = None,
                        basis: OrthoBasis | None = None) -> TruncatedOperator:
    basis = basis or orthonormal_basis(params.n, degree_max, params, samples)
    M, err = _matrix_of(spec, basis)
    meta = {**params.key(), "degree_max": degree_max, "symbol": _symbol_text(spec), "version": __version__}
    return TruncatedOperator(basis.blocks, M, err, meta, basis)


def _influence_norm(basis: OrthoBasis, terms):
    """Entrywise sqrt of sum_s c_s |psi_s|^2 with c_s = (w_s / sum w)^2.

    ``terms(z, E)`` returns ([(U_k, V_k), ...], K) describing the per-sample
    influence psi_s = sum_k U_k[s] (outer) V_k[s] - K. Expanding |psi|^2 turns
    the sum over samples into a few (D x m) @ (m x D) products per chunk.
    """
    sw = float(np.sum(basis.samples.weights))
    D = basis.dim
    var = np.zeros((D, D))
    K = None
    lin = np.zeros((D, D), dtype=complex)
    csum = 0.0
    for z, w in basis.samples.chunks():
        c = (w / sw) ** 2
        pairs, K = terms(z, basis.values(z))
        csum += float(np.sum(c))
        for k, (Uk, Vk) in enumerate(pairs):
            lin += (Uk * c[:, None]).T @ Vk
            # the (l, k) term is the conjugate of (k, l): take real parts, count twice
            for l, (Ul, Vl) in enumerate(pairs[k:], start=k):
                P = (Uk * np.conj(Ul)) * c[:, None]
                Q = Vk * np.conj(Vl)
                Pr, Pi = np.ascontiguousarray(P.real.T), np.ascontiguousarray(P.imag.T)
                Qr, Qi = np.ascontiguousarray(Q.real), np.ascontiguousarray(Q.imag)
                var += (1.0 if l == k else 2.0) * (Pr @ Qr - Pi @ Qi)
    var += -2.0 * np.real(np.conj(K) * lin) + np.abs(K) ** 2 * csum
    return np.sqrt(np.clip(var, 0.0, None))


def commutator_norm(spec_a, spec_b, degree_max: int, params: MCParams, samples: SampleSet | None = None,
                    basis: OrthoBasis | None = None):
    """Frobenius norm of [M_a, M_b] on one shared truncation, with first-order noise.

    The noise propagates every sample's influence on both matrices through the
    commutator, so correlations between the two estimates are kept.
    """
    if spec_a == spec_b:
        return 0.0, 0.0
    basis = basis or orthonormal_basis(params.n, degree_max, params, samples)
    A, _ = _matrix_of(spec_a, basis)
    B, _ = _matrix_of(spec_b, basis)
    C = A @ B - B @ A
    value = float(np.linalg.norm(C))

    def psi(z, E):
        # influence of one sample with rank-one R = conj(E)^T E on
        # (aR - A)B + A(bR - B) - (bR - B)A - B(aR - A)
        a = np.asarray(eval_symbol(spec_a, z))[:, None]
        b = np.asarray(eval_symbol(spec_b, z))[:, None]
        Ec = np.conj(E)
        pairs = [(a * Ec, E @ B), (b * (Ec @ A.T), E), (-b * Ec, E @ A), (-a * (Ec @ B.T), E)]
        return pairs, 2.0 * C

    noise = float(np.linalg.norm(_influence_norm(basis, psi)))
    return value, noise


def _rep_matrix(g: GroupElement, basis: OrthoBasis) -> np.ndarray:
    """Matrix R with pi(g) p_j = sum_i R_ij p_i, block by block, by exact-coefficient least squares."""
    D = len(basis.polys)
    R = np.zeros((D, D), dtype=complex)
    for b, sl in zip(basis.blocks, basis.slices):
        polys = list(basis.polys[sl])
        exps = sorted(monomials(polys[0].n, b.degree), key=grlex_key)
        P = coefficient_matrix(polys, exps)
        Q = coefficient_matrix([act_on_poly(g, p) for p in polys], exps)
        R[sl, sl] = np.linalg.lstsq(P, Q, rcond=None)[0]
    return R


def equivariance_check(spec, g: GroupElement, degree_max: int, params: MCParams,
                       samples: SampleSet | None = None, basis: OrthoBasis | None = None):
    """Compare the truncation of T_{a o g^-1} with U_g T_a U_g^-1 on one sample set.

    Returns (max |D|, max |D| / sigma) over entries of the discrepancy D.
    """
    basis = basis or orthonormal_basis(params.n, degree_max, params, samples)
    ginv = g.inverse()
    U = basis.Xinv @ _rep_matrix(g, basis) @ basis.X
    Uinv = basis.Xinv @ _rep_matrix(ginv, basis) @ basis.X

    def moved(z):
        return eval_symbol(spec, act(ginv, z))

    Mg, _ = _matrix_of(moved, basis)
    Ma, _ = _matrix_of(spec, basis)
    Dm = Mg - U @ Ma @ Uinv
    if np.allclose(U, np.eye(len(U)), atol=1e-13, rtol=0):
        return float(np.max(np.abs(Dm))), 0.0

    def psi(z, E):
        ag = np.asarray(moved(z))[:, None]
        a = np.asarray(eval_symbol(spec, z))[:, None]
        Ec = np.conj(E)
        # U R U^-1 with R = conj(E)^T E is (conj(E) U^T)^T (E U^-1)
        return [(ag * Ec, E), (-a * (Ec @ U.T), E @ Uinv)], Dm

    # entries fixed by symmetry have |D| and sigma both at roundoff; floor sigma there
    sigma = _influence_norm(basis, psi) + 1e-12 * float(np.max(np.abs(Ma)))
    return float(np.max(np.abs(Dm))), float(np.max(np.abs(Dm) / sigma))
