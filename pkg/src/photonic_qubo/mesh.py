"""Photonic chip model: butterfly MZI mesh, reference arm, and homodyne readout.

The mesh is an FFT-style butterfly of 2x2 MZIs: log2(N) layers, each pairing
every port exactly once with stride 1, 2, 4, ...  Every input-output path
crosses the same number of couplers ("equal length, equal loss").  Each MZI
carries a thermo-optic phase shifter on both arms; additional external
shifters sit on one input arm of each MZI from the second layer on.  For the
default 16-port mesh that gives 32 MZIs, 64 couplers and 88 shifters
(64 internal + 24 external).

The optical output interferes with a common reference beam in per-port mixers;
balanced photodetectors subtract the two mixer ports, so with all reference
phases at zero the detected vector is 2*e_ref*Re(U) s — a programmable real
matrix acting on the binary input.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DimensionMismatchError,
    TopologyError,
    UnsupportedConfigurationError,
)

UNITARITY_TOL = 1e-10
DEFAULT_PHASE_PER_VOLT_SQ = np.pi / 2  # rad/V^2; phi = pi at v = sqrt(2) V
DEFAULT_V_MAX = 2.0  # volts; covers a full 2*pi phase swing

# 50:50 coupler (symmetric MMI convention).
BS = np.array([[1.0, 1.0j], [1.0j, 1.0]], dtype=complex) / np.sqrt(2.0)


@dataclass(frozen=True)
class MeshTopology:
    """Butterfly mesh wiring: per-layer port pairings and external shifter sites.

    ``layers[l]`` lists the (top, bottom) port pairs coupled by layer l's MZIs.
    ``external_shifters`` lists (layer, port) sites of per-port phase shifters
    applied at the input of that layer.  Shifter ids: internal shifters come
    first (layer-major, pair-major, top arm then bottom arm), external shifters
    follow in listed order.
    """

    n_ports: int
    layers: tuple[tuple[tuple[int, int], ...], ...]
    external_shifters: tuple[tuple[int, int], ...]

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def n_mzis(self) -> int:
        return sum(len(layer) for layer in self.layers)

    @property
    def n_couplers(self) -> int:
        return 2 * self.n_mzis

    @property
    def n_internal_shifters(self) -> int:
        return 2 * self.n_mzis

    @property
    def n_shifters(self) -> int:
        return self.n_internal_shifters + len(self.external_shifters)

    def internal_shifter_id(self, layer: int, pair_index: int, arm: int) -> int:
        """Shifter id for an MZI arm; arm 0 is the top (first) port of the pair."""
        if arm not in (0, 1):
            raise ValueError("arm must be 0 (top) or 1 (bottom)")
        pairs_before = sum(len(self.layers[l]) for l in range(layer))
        return 2 * (pairs_before + pair_index) + arm

    def external_shifter_id(self, index: int) -> int:
        return self.n_internal_shifters + index

    def mzi_drive_shifter_ids(self) -> np.ndarray:
        """One designated internal shifter per MZI (the top arm), used when
        configuring the chip with random drive voltages."""
        return np.arange(0, self.n_internal_shifters, 2)

    def validate(self) -> None:
        n = self.n_ports
        if n < 2 or (n & (n - 1)) != 0:
            raise TopologyError(f"n_ports must be a power of two >= 2, got {n}")
        if len(self.layers) != int(np.log2(n)):
            raise TopologyError(
                f"expected log2({n}) = {int(np.log2(n))} layers, got {len(self.layers)}"
            )
        for l, layer in enumerate(self.layers):
            seen = sorted(p for pair in layer for p in pair)
            if seen != list(range(n)):
                raise TopologyError(f"layer {l} is not a perfect matching of the ports")
        for l, p in self.external_shifters:
            if not (0 <= l < self.n_layers) or not (0 <= p < n):
                raise TopologyError(f"external shifter at invalid site (layer {l}, port {p})")


@dataclass(frozen=True)
class ThermoOpticParams:
    """Phenomenological voltage-to-phase law: phi = k * v^2 + offset.

    Heater power, hence induced phase, scales with V^2.  ``phase_offset`` may
    be a scalar or per-shifter array; ``v_max`` bounds valid drive voltages.
    """

    phase_per_volt_sq: float = DEFAULT_PHASE_PER_VOLT_SQ
    phase_offset: float | np.ndarray = 0.0
    v_max: float = DEFAULT_V_MAX

    def __post_init__(self):
        if self.phase_per_volt_sq <= 0:
            raise ValueError("phase_per_volt_sq must be positive")


@dataclass(frozen=True)
class ReferenceArm:
    """Reference beam: common amplitude and per-port phases (default all zero)."""

    e_ref: float = 0.5
    phi_ref: float | np.ndarray = 0.0

    def __post_init__(self):
        if self.e_ref < 0:
            raise ValueError("e_ref must be non-negative")


@dataclass(frozen=True)
class HomodyneReadout:
    """Mixer output intensities and the balanced-detector difference signal."""

    i_plus: np.ndarray
    i_minus: np.ndarray
    i_bpd: np.ndarray


def build_topology(n_ports: int) -> MeshTopology:
    """Standard butterfly mesh: layer l pairs port p with p XOR 2^l.

    External shifters sit on the top input arm of every MZI from layer 1 on,
    giving (log2(N) - 1) * N/2 sites — 24 for the 16-port mesh.
    """
    if n_ports < 2 or n_ports > 64 or (n_ports & (n_ports - 1)) != 0:
        raise TopologyError(f"n_ports must be a power of two in [2, 64], got {n_ports}")
    n_layers = int(np.log2(n_ports))
    layers = []
    for l in range(n_layers):
        stride = 1 << l
        pairs = tuple(
            (p, p | stride) for p in range(n_ports) if not (p & stride)
        )
        layers.append(pairs)
    external = tuple(
        (l, pair[0]) for l in range(1, n_layers) for pair in layers[l]
    )
    topo = MeshTopology(
        n_ports=n_ports, layers=tuple(layers), external_shifters=external
    )
    topo.validate()
    return topo


def save_topology(topo: MeshTopology, path) -> None:
    payload = {
        "n_ports": topo.n_ports,
        "layers": [[list(pair) for pair in layer] for layer in topo.layers],
        "external_shifters": [list(site) for site in topo.external_shifters],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_topology(path) -> MeshTopology:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        topo = MeshTopology(
            n_ports=int(payload["n_ports"]),
            layers=tuple(
                tuple((int(a), int(b)) for a, b in layer) for layer in payload["layers"]
            ),
            external_shifters=tuple(
                (int(l), int(p)) for l, p in payload.get("external_shifters", [])
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise TopologyError(f"malformed topology file {path}: {exc}") from exc
    topo.validate()
    return topo


def default_topology_path() -> Path:
    return Path(__file__).parent / "data" / "fft_mesh_16.json"


def voltages_to_phases(v, params: ThermoOpticParams, n_shifters: int | None = None) -> np.ndarray:
    """Apply the thermo-optic law elementwise: phi_k = k * v_k^2 + offset_k."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 1:
        raise DimensionMismatchError(f"voltage vector must be 1-d, got shape {v.shape}")
    if n_shifters is not None and v.shape[0] != n_shifters:
        raise DimensionMismatchError(
            f"voltage vector length {v.shape[0]} != shifter count {n_shifters}"
        )
    offset = np.asarray(params.phase_offset, dtype=float)
    if offset.ndim == 1 and offset.shape[0] != v.shape[0]:
        raise DimensionMismatchError(
            f"phase offset length {offset.shape[0]} != voltage length {v.shape[0]}"
        )
    return params.phase_per_volt_sq * v * v + offset


def mzi_transfer(phi_top: float, phi_bottom: float) -> np.ndarray:
    """2x2 MZI: coupler, per-arm phases, coupler.  Always unitary."""
    inner = np.diag(np.exp(1j * np.array([phi_top, phi_bottom])))
    return BS @ inner @ BS


def compose_unitary(topo: MeshTopology, phi) -> np.ndarray:
    """Total mesh unitary for one phase configuration.

    Light traverses layer 0 first; each layer applies the external phase
    screen at its input and then its bank of 2x2 MZI blocks on the layer's
    port pairs (the crossing waveguides are folded into the pair indexing).
    """
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (topo.n_shifters,):
        raise DimensionMismatchError(
            f"phase vector length {phi.shape} != shifter count {topo.n_shifters}"
        )
    n = topo.n_ports
    ext_by_layer: dict[int, list[tuple[int, float]]] = {}
    for idx, (l, p) in enumerate(topo.external_shifters):
        ext_by_layer.setdefault(l, []).append((p, phi[topo.external_shifter_id(idx)]))

    u = np.eye(n, dtype=complex)
    for l, layer in enumerate(topo.layers):
        for p, angle in ext_by_layer.get(l, ()):
            u[p, :] *= np.exp(1j * angle)
        b = np.zeros((n, n), dtype=complex)
        for j, (top, bottom) in enumerate(layer):
            m = mzi_transfer(
                phi[topo.internal_shifter_id(l, j, 0)],
                phi[topo.internal_shifter_id(l, j, 1)],
            )
            b[top, top] = m[0, 0]
            b[top, bottom] = m[0, 1]
            b[bottom, top] = m[1, 0]
            b[bottom, bottom] = m[1, 1]
        u = b @ u
    return u


def unitarity_error(u: np.ndarray) -> float:
    n = u.shape[0]
    return float(np.max(np.abs(u.conj().T @ u - np.eye(n))))


def assert_unitary(u: np.ndarray, tol: float = UNITARITY_TOL) -> None:
    err = unitarity_error(u)
    if err >= tol:
        raise ValueError(f"matrix is not unitary: max |U^H U - I| = {err:.3e}")


def homodyne_readout(u: np.ndarray, s, ref: ReferenceArm) -> HomodyneReadout:
    """Mixer intensities and BPD signals for a binary input vector.

    I_+- = |E_ref|^2 + |E_out|^2 +- |E_ref||E_out| cos(phi_out - phi_ref), and
    the balanced detector reports the difference 2|E_ref||E_out| cos(...).
    """
    s = np.asarray(s, dtype=float)
    n = u.shape[0]
    if u.shape != (n, n) or s.shape != (n,):
        raise DimensionMismatchError(
            f"unitary {u.shape} and state {s.shape} dimensions do not agree"
        )
    e_out = u @ s.astype(complex)
    amp = np.abs(e_out)
    phase = np.angle(e_out)
    phi_ref = np.broadcast_to(np.asarray(ref.phi_ref, dtype=float), (n,))
    cross = ref.e_ref * amp * np.cos(phase - phi_ref)
    base = ref.e_ref**2 + amp**2
    return HomodyneReadout(i_plus=base + cross, i_minus=base - cross, i_bpd=2.0 * cross)


def effective_matrix(u: np.ndarray, ref: ReferenceArm) -> np.ndarray:
    """Real OVMM matrix A = 2 e_ref Re(U) realized by the BPD outputs.

    Valid only for the zero-reference-phase calibration; any nonzero phi_ref
    breaks the proportionality to Re(U).
    """
    phi_ref = np.asarray(ref.phi_ref, dtype=float)
    if np.any(phi_ref != 0.0):
        raise UnsupportedConfigurationError(
            "effective matrix requires all reference phases at zero"
        )
    return 2.0 * ref.e_ref * np.real(u)


@dataclass(frozen=True)
class ConfiguredMesh:
    """Immutable programmed chip state: voltages, phases, and derived U, A."""

    topology: MeshTopology
    thermo: ThermoOpticParams
    ref: ReferenceArm
    voltages: np.ndarray
    phases: np.ndarray
    u: np.ndarray
    a: np.ndarray

    @property
    def n(self) -> int:
        return self.topology.n_ports

    def readout(self, s) -> HomodyneReadout:
        return homodyne_readout(self.u, s, self.ref)


def configure_mesh(
    topo: MeshTopology,
    voltages,
    thermo: ThermoOpticParams | None = None,
    ref: ReferenceArm | None = None,
) -> ConfiguredMesh:
    """Program the chip: validate voltages, derive phases, U and A."""
    thermo = thermo or ThermoOpticParams()
    ref = ref or ReferenceArm()
    v = np.asarray(voltages, dtype=float)
    if v.shape != (topo.n_shifters,):
        raise DimensionMismatchError(
            f"voltage vector length {v.shape} != shifter count {topo.n_shifters}"
        )
    if np.any(v < 0.0) or np.any(v > thermo.v_max):
        raise ValueError(f"voltages must lie in [0, {thermo.v_max}]")
    phases = voltages_to_phases(v, thermo)
    u = compose_unitary(topo, phases)
    assert_unitary(u)
    a = effective_matrix(u, ref) if np.all(np.asarray(ref.phi_ref) == 0.0) else None
    arrays = [v, phases, u] + ([a] if a is not None else [])
    for arr in arrays:
        arr.flags.writeable = False
    return ConfiguredMesh(
        topology=topo, thermo=thermo, ref=ref, voltages=v, phases=phases, u=u, a=a
    )


def random_drive_voltages(topo: MeshTopology, rng: np.random.Generator,
                          v_max: float = DEFAULT_V_MAX) -> np.ndarray:
    """Experimental drive pattern: one random voltage per MZI, the rest zero."""
    v = np.zeros(topo.n_shifters)
    drive = topo.mzi_drive_shifter_ids()
    v[drive] = rng.uniform(0.0, v_max, size=drive.size)
    return v


def mesh_state_dict(mesh: ConfiguredMesh) -> dict:
    """State dump for cross-implementation diffing: voltages, phases, U, A."""
    u_pairs = [[float(z.real), float(z.imag)] for z in mesh.u.ravel()]
    return {
        "n_ports": mesh.n,
        "e_ref": float(mesh.ref.e_ref),
        "voltages": [float(x) for x in mesh.voltages],
        "phases": [float(x) for x in mesh.phases],
        "u": u_pairs,
        "a": None if mesh.a is None else [float(x) for x in mesh.a.ravel()],
    }


def save_mesh_state(mesh: ConfiguredMesh, path) -> None:
    Path(path).write_text(
        json.dumps(mesh_state_dict(mesh), sort_keys=True) + "\n", encoding="utf-8"
    )
