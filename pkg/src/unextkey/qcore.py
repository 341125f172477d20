"""Dense complex linear algebra and constructors for quantum objects.

States, channel Choi operators, privacy tests, and the handful of channel
manipulations the key-distillation bounds need.  Composite systems use
row-major tensor ordering with the first factor slowest, so a bipartite
matrix on A x B is indexed by (a*dB + b).  Choi operators are unnormalized
(trace d_in) and store the input factor first.
"""

from __future__ import annotations

import json

import numpy as np

from . import sdpcore

HERM_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-10


class QuantumError(ValueError):
    """Domain, shape, or numerical-validity error for quantum objects."""


def _as_matrix(obj):
    if isinstance(obj, (HermitianOperator, BipartiteState, ChannelChoi)):
        return obj.matrix
    return np.asarray(obj, dtype=complex)


def _check_hermitian(M, what="operator"):
    scale = max(1.0, np.abs(M).max()) if M.size else 1.0
    if np.abs(M - M.conj().T).max() > HERM_TOL * scale:
        raise QuantumError(f"{what} is not Hermitian within tolerance")


class HermitianOperator:
    """A complex Hermitian matrix with its dimension."""

    def __init__(self, entries):
        M = np.asarray(entries, dtype=complex)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise QuantumError(f"expected a square matrix, got shape {M.shape}")
        _check_hermitian(M)
        self.matrix = M
        self.dim = M.shape[0]

    def to_json(self):
        return matrix_to_json(self.matrix, [self.dim])

    @classmethod
    def from_json(cls, text):
        M, _ = matrix_from_json(text)
        return cls(M)


class BipartiteState:
    """Density operator on A (x) B with explicit subsystem dimensions."""

    def __init__(self, op, dA, dB):
        M = _as_matrix(op)
        if M.shape != (dA * dB, dA * dB):
            raise QuantumError(f"state shape {M.shape} does not match dims ({dA},{dB})")
        _check_hermitian(M, "state")
        eigs = np.linalg.eigvalsh(M)
        if eigs.min() < -PSD_TOL:
            raise QuantumError(f"state has negative eigenvalue {eigs.min():.3e}")
        if abs(np.trace(M).real - 1.0) > TRACE_TOL:
            raise QuantumError(f"state trace {np.trace(M).real} is not 1")
        self.matrix = M
        self.dA = int(dA)
        self.dB = int(dB)

    @property
    def dim(self):
        return self.dA * self.dB

    def to_json(self):
        return matrix_to_json(self.matrix, [self.dA, self.dB])


class ChannelChoi:
    """Unnormalized Choi operator of a channel, input factor first."""

    def __init__(self, op, d_in, d_out):
        M = _as_matrix(op)
        if M.shape != (d_in * d_out, d_in * d_out):
            raise QuantumError(f"Choi shape {M.shape} does not match dims ({d_in},{d_out})")
        _check_hermitian(M, "Choi operator")
        eigs = np.linalg.eigvalsh(M)
        if eigs.min() < -PSD_TOL:
            raise QuantumError(f"Choi operator not PSD, min eigenvalue {eigs.min():.3e}")
        marginal = partial_trace(M, [d_in, d_out], keep=[0])
        if np.abs(marginal - np.eye(d_in)).max() > TRACE_TOL:
            raise QuantumError("channel is not trace preserving")
        self.matrix = M
        self.d_in = int(d_in)
        self.d_out = int(d_out)

    def to_json(self):
        return matrix_to_json(self.matrix, [self.d_in, self.d_out])


class PrivacyTest:
    """Projector onto twisted maximal entanglement; passing certifies key bits.

    The twisting unitary acts on key systems A, B of dimension k and shield
    systems A', B', ordered (A, B, A', B'), and must be controlled on the A
    key basis: V = sum_i |i><i|_A (x) I_B (x) U_i on the shields.
    """

    def __init__(self, key_dim, shield_dims, twisting_unitary):
        k = int(key_dim)
        dAp, dBp = (int(x) for x in shield_dims)
        V = np.asarray(twisting_unitary, dtype=complex)
        n = k * k * dAp * dBp
        if V.shape != (n, n):
            raise QuantumError(f"twisting unitary shape {V.shape} does not match dims")
        if np.abs(V @ V.conj().T - np.eye(n)).max() > PSD_TOL:
            raise QuantumError("twisting unitary is not unitary within tolerance")
        rest = k * dAp * dBp
        blocks = V.reshape(k, rest, k, rest)
        for i in range(k):
            for j in range(k):
                if i != j and np.abs(blocks[i, :, j, :]).max() > PSD_TOL:
                    raise QuantumError("twisting unitary is not block diagonal in the key basis")
            # each diagonal block must factor as I_B (x) U_i
            blk = blocks[i, :, i, :].reshape(k, dAp * dBp, k, dAp * dBp)
            U_i = blk[0, :, 0, :]
            expected = np.einsum("ac,bd->abcd", np.eye(k), U_i)
            if np.abs(blk - expected).max() > PSD_TOL:
                raise QuantumError("diagonal block is not of the controlled form I_B (x) U_i")
        self.key_dim = k
        self.shield_dims = (dAp, dBp)
        self.twisting_unitary = V

    @classmethod
    def from_control_unitaries(cls, key_dim, shield_dims, unitaries):
        """Build V = sum_i |i><i|_A (x) I_B (x) U_i from the list of U_i."""
        k = int(key_dim)
        dAp, dBp = shield_dims
        if len(unitaries) != k:
            raise QuantumError(f"expected {k} control unitaries, got {len(unitaries)}")
        rest = k * dAp * dBp
        V = np.zeros((k * rest, k * rest), dtype=complex)
        for i, U in enumerate(unitaries):
            V[i * rest : (i + 1) * rest, i * rest : (i + 1) * rest] = np.kron(
                np.eye(k), np.asarray(U, dtype=complex)
            )
        return cls(key_dim, shield_dims, V)

    def projector(self):
        """The test operator V (Phi^k (x) I_shields) V^dagger."""
        k = self.key_dim
        dAp, dBp = self.shield_dims
        phi = max_entangled(k).matrix
        P = np.kron(phi, np.eye(dAp * dBp))
        V = self.twisting_unitary
        return V @ P @ V.conj().T


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def max_entangled(d: int) -> BipartiteState:
    """Maximally entangled state of Schmidt rank d."""
    if d < 2:
        raise QuantumError(f"Schmidt rank must be at least 2, got {d}")
    v = np.zeros(d * d, dtype=complex)
    v[:: d + 1] = 1.0 / np.sqrt(d)
    return BipartiteState(np.outer(v, v.conj()), d, d)


def isotropic(F: float, d: int) -> BipartiteState:
    """Isotropic state F*Phi + (1-F)*(I-Phi)/(d^2-1)."""
    if not 0.0 <= F <= 1.0:
        raise QuantumError(f"fidelity parameter {F} outside [0, 1]")
    phi = max_entangled(d).matrix
    M = F * phi + (1.0 - F) * (np.eye(d * d) - phi) / (d * d - 1)
    return BipartiteState(M, d, d)


def erased_state(p: float, d: int) -> BipartiteState:
    """Maximal entanglement sent through erasure: B gains an erasure flag.

    Output B has dimension d+1 with the erasure symbol as the last basis
    vector; the A marginal stays maximally mixed for every p.
    """
    if not 0.0 <= p <= 1.0:
        raise QuantumError(f"erasure probability {p} outside [0, 1]")
    if d < 2:
        raise QuantumError(f"dimension must be at least 2, got {d}")
    dB = d + 1
    M = np.zeros((d * dB, d * dB), dtype=complex)
    phi = max_entangled(d).matrix.reshape(d, d, d, d)
    big = M.reshape(d, dB, d, dB)
    big[:, :d, :, :d] += (1.0 - p) * phi
    for i in range(d):
        big[i, d, i, d] += p / d
    return BipartiteState(M, d, dB)


def erasure_channel(p: float, d: int) -> ChannelChoi:
    """Erasure channel: passes the input, or flags erasure with probability p."""
    eta = erased_state(p, d)
    return ChannelChoi(d * eta.matrix, d, d + 1)


def identity_channel(d: int) -> ChannelChoi:
    """Identity channel on a d-dimensional system."""
    return ChannelChoi(d * max_entangled(d).matrix, d, d)


def swap_operator(d: int) -> HermitianOperator:
    """Unitary swap of two d-dimensional factors; involutive permutation."""
    if d < 2:
        raise QuantumError(f"dimension must be at least 2, got {d}")
    W = np.zeros((d * d, d * d))
    for k in range(d):
        for kp in range(d):
            W[k * d + kp, kp * d + k] = 1.0
    return HermitianOperator(W)


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def partial_trace(M, dims, keep):
    """Trace out all tensor factors not listed in ``keep``.

    dims are the factor dimensions of the square operator M; keep is a
    collection of factor indices, preserved in their original order.
    """
    wrap = isinstance(M, HermitianOperator)
    A = _as_matrix(M)
    dims = [int(x) for x in dims]
    n = int(np.prod(dims))
    if A.shape != (n, n):
        raise QuantumError(f"operator shape {A.shape} does not match dims {dims}")
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise QuantumError(f"keep indices {keep} out of range for {len(dims)} factors")
    T = A.reshape(dims + dims)
    m = len(dims)
    row = list(range(m))
    col = [m + i if i in keep else i for i in range(m)]
    out_dim = int(np.prod([dims[k] for k in keep])) if keep else 1
    out = np.einsum(T, row + col, [i for i in row if i in keep] + [m + i for i in keep])
    out = out.reshape(out_dim, out_dim)
    return HermitianOperator(out) if wrap else out


def apply_channel(ch: ChannelChoi, rho: BipartiteState, act_on: str = "B") -> BipartiteState:
    """Apply a channel, via its Choi operator, to one share of a state."""
    G = ch.matrix.reshape(ch.d_in, ch.d_out, ch.d_in, ch.d_out)
    R = rho.matrix.reshape(rho.dA, rho.dB, rho.dA, rho.dB)
    if act_on == "B":
        if rho.dB != ch.d_in:
            raise QuantumError(f"channel input {ch.d_in} does not match B dim {rho.dB}")
        out = np.einsum("abcd,bodp->aocp", R, G)
        return BipartiteState(out.reshape(rho.dA * ch.d_out, -1), rho.dA, ch.d_out)
    if act_on == "A":
        if rho.dA != ch.d_in:
            raise QuantumError(f"channel input {ch.d_in} does not match A dim {rho.dA}")
        out = np.einsum("abcd,aocp->obpd", R, G)
        return BipartiteState(out.reshape(ch.d_out * rho.dB, -1), ch.d_out, rho.dB)
    raise QuantumError(f"act_on must be 'A' or 'B', got {act_on!r}")


def compose_channels(second: ChannelChoi, first: ChannelChoi) -> ChannelChoi:
    """Choi operator of (second after first)."""
    if first.d_out != second.d_in:
        raise QuantumError("channel dimensions do not compose")
    G1 = first.matrix.reshape(first.d_in, first.d_out, first.d_in, first.d_out)
    G2 = second.matrix.reshape(second.d_in, second.d_out, second.d_in, second.d_out)
    out = np.einsum("abcd,bodp->aocp", G1, G2)
    return ChannelChoi(out.reshape(first.d_in * second.d_out, -1), first.d_in, second.d_out)


def tensor_state(rho: BipartiteState, sigma: BipartiteState) -> BipartiteState:
    """Tensor two bipartite states, regrouped to (A1 A2) : (B1 B2)."""
    T = np.kron(rho.matrix, sigma.matrix)
    dims = [rho.dA, rho.dB, sigma.dA, sigma.dB]
    T = T.reshape(dims + dims)
    T = np.transpose(T, (0, 2, 1, 3, 4, 6, 5, 7))
    dA, dB = rho.dA * sigma.dA, rho.dB * sigma.dB
    return BipartiteState(T.reshape(dA * dB, dA * dB), dA, dB)


def _psd_sqrt(M, what="operator"):
    eigs, U = np.linalg.eigh(M)
    if eigs.min() < -PSD_TOL:
        raise QuantumError(f"{what} not PSD after tolerance clipping ({eigs.min():.3e})")
    eigs = np.clip(eigs, 0.0, None)
    return (U * np.sqrt(eigs)) @ U.conj().T


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(sigma) rho sqrt(sigma)))^2.

    Evaluated as the squared trace norm of sqrt(rho) sqrt(sigma), which is
    the same quantity but better conditioned near rank deficiency.
    """
    R, S = _as_matrix(rho), _as_matrix(sigma)
    if R.shape != S.shape:
        raise QuantumError(f"fidelity needs equal dims, got {R.shape} vs {S.shape}")
    rR = _psd_sqrt(R, "first argument")
    rS = _psd_sqrt(S, "second argument")
    return float(np.linalg.svd(rR @ rS, compute_uv=False).sum() ** 2)


def twirl_to_isotropic(rho: BipartiteState) -> BipartiteState:
    """Exact action of the U (x) conj(U) twirl: project onto the isotropic family."""
    if rho.dA != rho.dB:
        raise QuantumError("twirl requires equal subsystem dimensions")
    d = rho.dA
    phi = max_entangled(d).matrix
    F = float(np.real(np.trace(phi @ rho.matrix)))
    M = F * phi + (1.0 - F) * (np.eye(d * d) - phi) / (d * d - 1)
    return BipartiteState(M, d, d)


def heisenberg_weyl(z: int, x: int, d: int):
    """W^{z,x} = Z^z X^x with X the cyclic shift and Z the clock operator."""
    om = np.exp(2j * np.pi / d)
    X = np.roll(np.eye(d), 1, axis=0)
    Z = np.diag(om ** np.arange(d)).astype(complex)
    return np.linalg.matrix_power(Z, z % d) @ np.linalg.matrix_power(X, x % d)


def apply_teleportation_locc(resource: BipartiteState, target: BipartiteState) -> BipartiteState:
    """One-way LOCC teleportation of the B share of ``target`` through ``resource``.

    Alice holds the target rho_{AA'} and the A0 share of the resource; she
    measures (A', A0) in the Heisenberg-Weyl displaced Bell basis and Bob
    applies the matching correction to B0.  With a maximally entangled
    resource the output equals the target exactly; otherwise the resource
    noise is imprinted on the teleported share.  A target share smaller
    than the resource rank is embedded, and the output B system keeps the
    resource dimension.
    """
    d = resource.dA
    if resource.dB != d:
        raise QuantumError("resource must have equal subsystem dimensions")
    m = target.dB
    if m > d:
        raise QuantumError(f"teleported subsystem ({m}) exceeds resource rank ({d})")
    a = target.dA
    R = target.matrix.reshape(a, m, a, m)
    if m < d:
        Rp = np.zeros((a, d, a, d), dtype=complex)
        Rp[:, :m, :, :m] = R
        R = Rp
    chi = resource.matrix.reshape(d, d, d, d)
    phi = max_entangled(d).matrix.reshape(d, d, d, d)
    out = np.zeros((a, d, a, d), dtype=complex)
    for z in range(d):
        for x in range(d):
            W = heisenberg_weyl(z, x, d)
            # Bell projector on (A', A0), displaced on the A0 factor
            P = np.einsum("gx,pxqy,cy->pgqc", W, phi, W.conj())
            C = W.T  # undoes the conj(W) the measurement imprints on B0
            out += np.einsum(
                "pgqc,aqup,cegf,oe,vf->aouv", P, R, chi, C, C.conj()
            )
    return BipartiteState(out.reshape(a * d, a * d), a, d)


def privacy_pass_probability(omega, test: PrivacyTest) -> float:
    """Probability that a state on (A, B, A', B') passes the privacy test."""
    M = _as_matrix(omega)
    proj = test.projector()
    if M.shape != proj.shape:
        raise QuantumError(f"state shape {M.shape} does not match test dims {proj.shape}")
    q = float(np.real(np.trace(proj @ M)))
    if not -1e-9 <= q <= 1 + 1e-9:
        raise QuantumError(f"pass probability {q} outside [0, 1]")
    return min(max(q, 0.0), 1.0)


def apply_one_way_locc(rho: BipartiteState, instrument, decoders) -> BipartiteState:
    """Apply sum_x (E^x_A (x) D^x_B) for a Kraus instrument and decoder channels.

    instrument[x] is the Kraus list of the x-th instrument branch on A (the
    branches together are trace preserving); decoders[x] is the Kraus list
    of the channel Bob applies on B when told x.
    """
    if len(instrument) != len(decoders):
        raise QuantumError("instrument and decoder lists must have equal length")
    dA_out = np.asarray(instrument[0][0]).shape[0]
    dB_out = np.asarray(decoders[0][0]).shape[0]
    out = np.zeros((dA_out * dB_out, dA_out * dB_out), dtype=complex)
    for kraus_A, kraus_B in zip(instrument, decoders):
        for K in kraus_A:
            for L in kraus_B:
                KL = np.kron(np.asarray(K, dtype=complex), np.asarray(L, dtype=complex))
                out += KL @ rho.matrix @ KL.conj().T
    return BipartiteState(out, dA_out, dB_out)


# ---------------------------------------------------------------------------
# two-extendibility (feasibility SDPs)
# ---------------------------------------------------------------------------


def _swap_conjugation(d_first, d_swap):
    """Real embedded conjugation matrix for I_{first} (x) SWAP_{last two}."""
    W = np.kron(np.eye(d_first), swap_operator(d_swap).matrix.real)
    return sdpcore.embed_hermitian(W)


def is_two_extendible(rho: BipartiteState, tol: float = 1e-7) -> bool:
    """Feasibility of a swap-symmetric extension of rho on A (x) B (x) E."""
    dA, dB = rho.dA, rho.dB
    n = 2 * dA * dB * dB
    K = _swap_conjugation(dA, dB)
    problem = sdpcore.SdpProblem(
        sense="max",
        blocks=[("w", n)],
        scalars=[],
        objective=sdpcore.Objective(),
        equalities=[
            sdpcore.Equality(
                (sdpcore.BlockTerm("w", ops=(sdpcore.PTrace((2, dA, dB, dB), 3),)),),
                sdpcore.embed_hermitian(rho.matrix),
                symmetric=True,
            ),
            sdpcore.Equality(
                (
                    sdpcore.BlockTerm("w", ops=(sdpcore.Conjugate(K),)),
                    sdpcore.BlockTerm("w", coeff=-1.0),
                ),
                np.zeros((n, n)),
                symmetric=True,
            ),
        ],
        name="two_extendible_state",
    )
    solution = sdpcore.solve(problem, tol)
    if solution.status == sdpcore.OPTIMAL:
        return True
    if solution.status == sdpcore.INFEASIBLE:
        return False
    raise QuantumError(f"two-extendibility SDP ended with status {solution.status}")


def is_two_extendible_channel(ch: ChannelChoi, tol: float = 1e-7) -> bool:
    """Choi-level analogue: a swap-covariant broadcast extension of the channel."""
    dI, dO = ch.d_in, ch.d_out
    n = 2 * dI * dO * dO
    K = _swap_conjugation(dI, dO)
    problem = sdpcore.SdpProblem(
        sense="max",
        blocks=[("P", n)],
        scalars=[],
        objective=sdpcore.Objective(),
        equalities=[
            sdpcore.Equality(
                (sdpcore.BlockTerm("P", ops=(sdpcore.PTrace((2, dI, dO, dO), 3),)),),
                sdpcore.embed_hermitian(ch.matrix),
                symmetric=True,
            ),
            sdpcore.Equality(
                (
                    sdpcore.BlockTerm("P", ops=(sdpcore.Conjugate(K),)),
                    sdpcore.BlockTerm("P", coeff=-1.0),
                ),
                np.zeros((n, n)),
                symmetric=True,
            ),
        ],
        name="two_extendible_channel",
    )
    solution = sdpcore.solve(problem, tol)
    if solution.status == sdpcore.OPTIMAL:
        return True
    if solution.status == sdpcore.INFEASIBLE:
        return False
    raise QuantumError(f"two-extendibility SDP ended with status {solution.status}")


# ---------------------------------------------------------------------------
# random objects (seeded; used by tests and demos)
# ---------------------------------------------------------------------------


def random_unitary(d, rng):
    G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    Q, R = np.linalg.qr(G)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_state(dA, dB, rng, rank=None) -> BipartiteState:
    n = dA * dB
    rank = rank or n
    G = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    M = G @ G.conj().T
    return BipartiteState(M / np.trace(M).real, dA, dB)


def random_kraus_set(d_in, d_out, count, rng):
    """Kraus operators of a random channel: sum_k K^dag K = I."""
    G = [rng.normal(size=(d_out, d_in)) + 1j * rng.normal(size=(d_out, d_in)) for _ in range(count)]
    T = sum(g.conj().T @ g for g in G)
    Tinv_sqrt = np.linalg.inv(_psd_sqrt(T))
    return [g @ Tinv_sqrt for g in G]


def random_channel(d_in, d_out, rng, kraus_count=None) -> ChannelChoi:
    kraus_count = kraus_count or d_in * d_out
    kraus = random_kraus_set(d_in, d_out, kraus_count, rng)
    return channel_from_kraus(kraus, d_in, d_out)


def channel_from_kraus(kraus, d_in, d_out) -> ChannelChoi:
    G = np.zeros((d_in * d_out, d_in * d_out), dtype=complex)
    for K in kraus:
        v = np.asarray(K, dtype=complex).T.reshape(-1)
        G += np.outer(v, v.conj())
    return ChannelChoi(G, d_in, d_out)


def random_one_way_locc(dA, dB, rng, outcomes=2, kraus_per=2):
    """A random one-way LOCC channel as (instrument on A, decoders on B)."""
    kraus = random_kraus_set(dA, dA, outcomes * kraus_per, rng)
    instrument = [kraus[i * kraus_per : (i + 1) * kraus_per] for i in range(outcomes)]
    decoders = [random_kraus_set(dB, dB, kraus_per, rng) for _ in range(outcomes)]
    return instrument, decoders


# ---------------------------------------------------------------------------
# JSON matrix format for golden-file tests
# ---------------------------------------------------------------------------


def matrix_to_json(M, dims) -> str:
    M = np.asarray(M, dtype=complex)
    return json.dumps(
        {"dims": [int(d) for d in dims], "re": M.real.tolist(), "im": M.imag.tolist()},
        sort_keys=True,
    )


def matrix_from_json(text):
    payload = json.loads(text)
    M = np.asarray(payload["re"], dtype=float) + 1j * np.asarray(payload["im"], dtype=float)
    return M, payload["dims"]
