"""Matrix Cartan decompositions of the rank-one noncompact algebras, bracket
curvature, Hermitian sectional curvature, and abelian-subspace search.

Supported algebras: so(1,n), su(1,m), sp(1,m).  The invariant form is a
scaled trace form B = kappa * tr(XY); the scale is fixed per algebra so that
coordinate basis vectors of p are B-orthonormal, which makes the sectional
curvature of so(1,n) boost planes exactly -1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "CartanDecomposition",
    "AbelianWitness",
    "build_algebra",
    "curvature_bracket",
    "sectional_value",
    "hermitian_sectional",
    "is_abelian",
    "max_abelian",
    "rank_bound",
]


@dataclass(frozen=True)
class CartanDecomposition:
    """g = k (+) p with matrix bases and the scaled trace form.

    k_basis, p_basis : stacks of complex matrices, shape (dim, N, N)
    trace_scale      : kappa in B(X, Y) = kappa * tr(XY)
    conjugation      : matrix map fixing the real form of g^c
    p_complex_basis  : basis of p^c (the complexified p); for these rank-one
                       algebras it coincides with p_basis over C
    p10_basis        : basis of the (1,0)-part when a complex structure
                       exists (su only), else None
    """

    algebra: str
    rank_param: int
    k_basis: np.ndarray
    p_basis: np.ndarray
    trace_scale: float
    p10_basis: np.ndarray | None = None

    @property
    def dim_k(self) -> int:
        return self.k_basis.shape[0]

    @property
    def dim_p(self) -> int:
        return self.p_basis.shape[0]

    @property
    def matrix_size(self) -> int:
        return self.k_basis.shape[-1]

    def form(self, x: np.ndarray, y: np.ndarray) -> complex:
        """Complex-bilinear extension of the invariant form."""
        return self.trace_scale * np.trace(x @ y)

    def conjugate(self, z: np.ndarray) -> np.ndarray:
        """Conjugation of g^c with respect to the real form."""
        return _real_form_conjugate(self, z)

    def _eta(self):
        n = self.matrix_size
        eta = np.eye(n)
        eta[0, 0] = -1.0
        return eta

    def p_projection_residual(self, z: np.ndarray) -> float:
        """Distance from z to span_C(p_basis) relative to |z|."""
        basis = self.p_basis.reshape(self.dim_p, -1)
        target = z.reshape(-1)
        coef, *_ = np.linalg.lstsq(basis.T, target, rcond=None)
        resid = target - basis.T @ coef
        scale = max(np.linalg.norm(target), 1e-300)
        return float(np.linalg.norm(resid) / scale)

    def random_p_element(self, rng, complex_coeffs=True) -> np.ndarray:
        c = rng.normal(size=self.dim_p)
        if complex_coeffs:
            c = c + 1j * rng.normal(size=self.dim_p)
        return np.einsum("k,kij->ij", c, self.p_basis)

    def cartan_relations_residual(self, rng=None, samples: int = 20) -> float:
        """Sup residual of [k,k] in k, [k,p] in p, [p,p] in k over random
        pairs, measured by projection defect onto the right factor."""
        rng = rng or np.random.default_rng(0)

        def rand(basis):
            c = rng.normal(size=basis.shape[0])
            return np.einsum("k,kij->ij", c, basis)

        def proj_defect(z, basis):
            b = basis.reshape(basis.shape[0], -1)
            coef, *_ = np.linalg.lstsq(b.T, z.reshape(-1), rcond=None)
            r = z.reshape(-1) - b.T @ coef
            return np.linalg.norm(r) / max(np.linalg.norm(z.reshape(-1)), 1e-300)

        worst = 0.0
        for _ in range(samples):
            kk = _bracket(rand(self.k_basis), rand(self.k_basis))
            kp = _bracket(rand(self.k_basis), rand(self.p_basis))
            pp = _bracket(rand(self.p_basis), rand(self.p_basis))
            for z, basis in ((kk, self.k_basis), (kp, self.p_basis), (pp, self.k_basis)):
                if np.linalg.norm(z) > 1e-14:
                    worst = max(worst, proj_defect(z, basis))
        return worst

    def form_definiteness(self) -> tuple:
        """(max B on k, min B on p) over the basis Gram matrices; the form is
        negative definite on k and positive definite on p."""
        gram_k = np.array(
            [[self.form(a, b).real for b in self.k_basis] for a in self.k_basis]
        )
        gram_p = np.array(
            [[self.form(a, b).real for b in self.p_basis] for a in self.p_basis]
        )
        return float(np.linalg.eigvalsh(gram_k).max()), float(np.linalg.eigvalsh(gram_p).min())


@dataclass(frozen=True)
class AbelianWitness:
    basis: np.ndarray
    max_bracket_norm: float
    dimension: int
    rank_warning: bool = False

    @property
    def is_abelian(self) -> bool:
        return self.max_bracket_norm < 1e-10


def _bracket(x, y):
    return x @ y - y @ x


def _e(n, i, j):
    m = np.zeros((n, n))
    m[i, j] = 1.0
    return m


# ---------------------------------------------------------------------------
# constructions


def _build_so(n: int) -> CartanDecomposition:
    if n < 2:
        raise ValueError("so(1,n) needs n >= 2")
    size = n + 1
    k = [
        (_e(size, i, j) - _e(size, j, i))
        for i in range(1, size)
        for j in range(i + 1, size)
    ]
    p = [(_e(size, 0, i) + _e(size, i, 0)) for i in range(1, size)]
    return CartanDecomposition(
        "so", n, np.stack(k).astype(complex), np.stack(p).astype(complex), 0.5
    )


def _su_p_matrix(m: int, b: np.ndarray) -> np.ndarray:
    """p element of su(1,m) parametrized by b in C^m."""
    size = m + 1
    x = np.zeros((size, size), dtype=complex)
    x[0, 1:] = b
    x[1:, 0] = b.conj()
    return x


def _build_su(m: int) -> CartanDecomposition:
    if m < 1:
        raise ValueError("su(1,m) needs m >= 1")
    size = m + 1
    k = []
    # u(m) block completed to traceless anti-hermitian with the i*diag part
    for j in range(1, size):
        d = np.zeros((size, size), dtype=complex)
        d[0, 0] = 1j
        d[j, j] = -1j
        k.append(d)
    for i in range(1, size):
        for j in range(i + 1, size):
            k.append(_e(size, i, j) - _e(size, j, i) + 0j)
            k.append(1j * (_e(size, i, j) + _e(size, j, i)))
    p = []
    for j in range(m):
        e = np.zeros(m, dtype=complex)
        e[j] = 1.0
        p.append(_su_p_matrix(m, e))
        p.append(_su_p_matrix(m, 1j * e))
    p10 = []
    for j in range(m):
        x = np.zeros((size, size), dtype=complex)
        x[0, 1 + j] = 1.0
        p10.append(x)
    return CartanDecomposition(
        "su", m, np.stack(k), np.stack(p), 0.5, p10_basis=np.stack(p10)
    )


def _quat_to_complex(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Complex 2N x 2N realization of the quaternion matrix a + b j."""
    n = a.shape[0]
    out = np.zeros((2 * n, 2 * n), dtype=complex)
    out[0::2, 0::2] = a
    out[0::2, 1::2] = b
    out[1::2, 0::2] = -b.conj()
    out[1::2, 1::2] = a.conj()
    return out


def _build_sp(m: int) -> CartanDecomposition:
    if m < 1:
        raise ValueError("sp(1,m) needs m >= 1")
    size = m + 1
    k = []
    # sp(1) + sp(m): block-diagonal quaternion anti-hermitian matrices
    units = [
        (np.array([[1j]]), np.zeros((1, 1))),         # i
        (np.zeros((1, 1)), np.array([[1.0 + 0j]])),   # j
        (np.zeros((1, 1)), np.array([[1j]])),         # k
    ]
    for d in range(size):
        for ua, ub in units:
            a = np.zeros((size, size), dtype=complex)
            b = np.zeros((size, size), dtype=complex)
            a[d, d] = ua[0, 0]
            b[d, d] = ub[0, 0]
            if d == 0:
                k.append(_quat_to_complex(a, b))
            else:
                k.append(_quat_to_complex(a, b))
    for i in range(1, size):
        for j in range(i + 1, size):
            # real, i, j, k off-diagonal anti-hermitian pairs in the block
            for ua, ub, sgn in (
                (1.0 + 0j, 0j, -1.0),   # q real: anti-hermitian needs skew
                (1j, 0j, 1.0),
                (0j, 1.0 + 0j, 1.0),
                (0j, 1j, 1.0),
            ):
                a = np.zeros((size, size), dtype=complex)
                b = np.zeros((size, size), dtype=complex)
                if ua:
                    a[i, j] = ua
                    a[j, i] = sgn * np.conj(ua) if sgn < 0 else sgn * np.conj(ua)
                if ub:
                    b[i, j] = ub
                    b[j, i] = sgn * np.conj(ub)
                k.append(_quat_to_complex(a, b))
    p = []
    for j in range(m):
        for ua, ub in ((1.0 + 0j, 0j), (1j, 0j), (0j, 1.0 + 0j), (0j, 1j)):
            a = np.zeros((size, size), dtype=complex)
            b = np.zeros((size, size), dtype=complex)
            # v in H^m at slot j with quaternion unit (ua + ub jq)
            a[0, 1 + j] = ua
            a[1 + j, 0] = np.conj(ua)
            b[0, 1 + j] = ub
            b[1 + j, 0] = -ub  # quaternion conjugate flips j-part sign: (q*)_j = -q_j
            p.append(_quat_to_complex(a, b))
    return CartanDecomposition("sp", m, np.stack(k), np.stack(p), 0.25)


def build_algebra(algebra: str, n_or_m: int) -> CartanDecomposition:
    """Build so(1,n), su(1,m) or sp(1,m) with explicit matrix bases."""
    if algebra == "so":
        return _build_so(n_or_m)
    if algebra == "su":
        return _build_su(n_or_m)
    if algebra == "sp":
        return _build_sp(n_or_m)
    raise ValueError(f"unsupported algebra {algebra!r}")


# ---------------------------------------------------------------------------
# curvature and abelian subspaces


def curvature_bracket(cd: CartanDecomposition, x, y, z, check: bool = True):
    """R'(X,Y)Z = [[X,Y],Z] on p^c."""
    if check:
        for v in (x, y, z):
            if cd.p_projection_residual(v) > 1e-10:
                raise ValueError("curvature arguments must lie in p^c")
    return _bracket(_bracket(x, y), z)


def sectional_value(cd: CartanDecomposition, x, y) -> float:
    """B([[X,Y],X], Y) for real X, Y in p: the sectional curvature of the
    plane when X, Y are B-orthonormal (equals -1 for so(1,n) boost planes)."""
    return float(cd.form(curvature_bracket(cd, x, y, x, check=False), y).real)


def hermitian_sectional(cd: CartanDecomposition, x, y) -> complex:
    """<R'(X,Y) conj(X), conj(Y)> = B([X,Y], [conj X, conj Y]) on p^c.

    Real part is non-positive; vanishes exactly when [X,Y] = 0.
    """
    xc = _real_form_conjugate(cd, x)
    yc = _real_form_conjugate(cd, y)
    return complex(cd.form(_bracket(x, y), _bracket(xc, yc)))


def _real_form_conjugate(cd: CartanDecomposition, z: np.ndarray) -> np.ndarray:
    """Conjugation of g^c fixing the real form."""
    if cd.algebra == "so":
        return z.conj()
    if cd.algebra == "su":
        eta = cd._eta()
        return -eta @ z.conj().T @ eta
    if cd.algebra == "sp":
        n = cd.matrix_size
        jmat = np.zeros((n, n), dtype=complex)
        jmat[0::2, 1::2] = np.eye(n // 2)
        jmat[1::2, 0::2] = -np.eye(n // 2)
        return jmat @ z.conj() @ np.linalg.inv(jmat)
    raise ValueError(cd.algebra)


def is_abelian(cd: CartanDecomposition, basis) -> AbelianWitness:
    """Pairwise-bracket test for a list/stack of p^c vectors."""
    basis = np.asarray(basis)
    dim = basis.shape[0]
    flat = basis.reshape(dim, -1)
    rank = np.linalg.matrix_rank(flat, tol=1e-10)
    worst = 0.0
    for i in range(dim):
        for j in range(i + 1, dim):
            worst = max(worst, float(np.linalg.norm(_bracket(basis[i], basis[j]))))
    return AbelianWitness(basis, worst, dim, rank_warning=rank < dim)


@dataclass(frozen=True)
class MaxAbelianResult:
    nu_lower: int
    witness: AbelianWitness
    upper_bound: int
    certified: bool
    certificate: dict


def _so_bracket_minor_certificate(cd: CartanDecomposition, trials: int, seed: int) -> dict:
    """Exact argument that so(1,n) has no 2-dimensional abelian subspace.

    A p^c element is X_v with complex spatial vector v, and the bracket is
    [X_v, X_w] = embed(v w^T - w v^T): its spatial entries are exactly the
    2x2 minors of the pair (v, w).  All minors vanish iff v and w are
    complex-proportional, so any two independent vectors bracket nontrivially.
    The structural identity is verified on seeded samples and the conclusion
    probed by randomized falsification.
    """
    n = cd.rank_param
    rng = np.random.default_rng(seed)
    identity_residual = 0.0
    min_violation = np.inf
    for _ in range(trials):
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        w = rng.normal(size=n) + 1j * rng.normal(size=n)
        xv = np.einsum("k,kij->ij", v, cd.p_basis)
        xw = np.einsum("k,kij->ij", w, cd.p_basis)
        br = _bracket(xv, xw)
        minors = np.outer(v, w) - np.outer(w, v)
        expected = np.zeros_like(br)
        expected[1:, 1:] = minors
        identity_residual = max(identity_residual, float(np.linalg.norm(br - expected)))
        # make the pair independent and record the violation size
        gram = np.array([[v @ v.conj(), w @ v.conj()], [v @ w.conj(), w @ w.conj()]])
        if abs(np.linalg.det(gram)) > 1e-6:
            min_violation = min(min_violation, float(np.linalg.norm(br)))
    return {
        "method": "bracket entries are the 2x2 minors of (v, w); all minors "
        "vanish iff the vectors are proportional",
        "samples": trials,
        "identity_residual": identity_residual,
        "min_independent_bracket_norm": min_violation,
    }


def max_abelian(cd: CartanDecomposition, strategy: str = "auto", seed: int = 0) -> MaxAbelianResult:
    """Constructive lower bound for the maximal abelian dimension nu, with an
    exact certificate for so(1,n) and the half-dimension upper bound
    reported for the others."""
    if strategy not in ("auto",):
        raise ValueError(f"unsupported strategy {strategy!r}")
    dim_pc = cd.dim_p  # complex dimension of p^c equals real dimension of p
    upper = dim_pc // 2
    if cd.algebra == "so":
        witness = is_abelian(cd, cd.p_basis[:1])
        cert = _so_bracket_minor_certificate(cd, trials=10000, seed=seed)
        certified = (
            witness.is_abelian
            and cert["identity_residual"] < 1e-12
            and cert["min_independent_bracket_norm"] > 1e-6
        )
        return MaxAbelianResult(1, witness, upper, certified, cert)
    if cd.algebra == "su":
        witness = is_abelian(cd, cd.p10_basis)
        return MaxAbelianResult(
            witness.dimension,
            witness,
            upper,
            False,
            {"method": "p^{1,0} of the invariant complex structure"},
        )
    if cd.algebra == "sp":
        # the complex subfield su(1,m) embeds in sp(1,m); its p^{1,0} stays
        # abelian under the embedding
        m = cd.rank_param
        su = _build_su(m)
        emb = []
        for j in range(m):
            e = np.zeros(m, dtype=complex)
            e[j] = 1.0
            x_re = _sp_p_matrix(m, e)
            x_im = _sp_p_matrix(m, 1j * e)
            emb.append(0.5 * (x_re - 1j * x_im))
        witness = is_abelian(cd, np.stack(emb))
        return MaxAbelianResult(
            witness.dimension,
            witness,
            upper,
            False,
            {"method": "embedded su(1,m) holomorphic subspace"},
        )
    raise ValueError(cd.algebra)


def _sp_p_matrix(m: int, v: np.ndarray) -> np.ndarray:
    """p element of sp(1,m) for a complex vector v (j-part zero)."""
    size = m + 1
    a = np.zeros((size, size), dtype=complex)
    a[0, 1:] = v
    a[1:, 0] = v.conj()
    return _quat_to_complex(a, np.zeros_like(a))


def rank_bound(result: MaxAbelianResult) -> int:
    """Pluriharmonic rank estimate 2 * nu from an abelian-subspace result."""
    return 2 * result.nu_lower
