"""Tests for the butterfly mesh model, unitary composition, and homodyne readout."""

import cmath
import math

import numpy as np
import pytest

from photonic_qubo.errors import (
    DimensionMismatchError,
    TopologyError,
    UnsupportedConfigurationError,
)
from photonic_qubo.mesh import (
    MeshTopology,
    ReferenceArm,
    ThermoOpticParams,
    build_topology,
    compose_unitary,
    configure_mesh,
    default_topology_path,
    effective_matrix,
    homodyne_readout,
    load_topology,
    mesh_state_dict,
    mzi_transfer,
    random_drive_voltages,
    save_topology,
    unitarity_error,
    voltages_to_phases,
)


def mzi_oracle(phi_top, phi_bottom):
    """Direct 2x2 complex multiplication, written out elementwise."""
    s = 1.0 / math.sqrt(2.0)
    bs = [[s, s * 1j], [s * 1j, s]]
    d = [[cmath.exp(1j * phi_top), 0.0], [0.0, cmath.exp(1j * phi_bottom)]]

    def matmul(a, b):
        return [
            [sum(a[i][k] * b[k][j] for k in range(2)) for j in range(2)]
            for i in range(2)
        ]

    return matmul(matmul(bs, d), bs)


def compose_oracle(topo: MeshTopology, phi):
    """Layer-by-layer dense product in pure Python lists (no numpy matmul)."""
    n = topo.n_ports
    u = [[1.0 + 0j if i == j else 0j for j in range(n)] for i in range(n)]
    ext = {}
    for idx, (layer, port) in enumerate(topo.external_shifters):
        ext.setdefault(layer, []).append((port, phi[topo.external_shifter_id(idx)]))
    for l, layer in enumerate(topo.layers):
        d = [[1.0 + 0j if i == j else 0j for j in range(n)] for i in range(n)]
        for port, angle in ext.get(l, []):
            d[port][port] = cmath.exp(1j * angle)
        b = [[0j for _ in range(n)] for _ in range(n)]
        for j, (top, bottom) in enumerate(layer):
            m = mzi_oracle(
                phi[topo.internal_shifter_id(l, j, 0)],
                phi[topo.internal_shifter_id(l, j, 1)],
            )
            b[top][top] = m[0][0]
            b[top][bottom] = m[0][1]
            b[bottom][top] = m[1][0]
            b[bottom][bottom] = m[1][1]
        for factor in (d, b):
            u = [
                [sum(factor[i][k] * u[k][j] for k in range(n)) for j in range(n)]
                for i in range(n)
            ]
    return np.array(u)


def path_count_matrix(topo: MeshTopology):
    """Number of distinct MZI-hop paths from each input to each output."""
    n = topo.n_ports
    total = np.eye(n, dtype=int)
    for layer in topo.layers:
        adj = np.zeros((n, n), dtype=int)
        for top, bottom in layer:
            adj[top, top] = adj[top, bottom] = 1
            adj[bottom, top] = adj[bottom, bottom] = 1
        total = adj @ total
    return total


class TestTopology:
    def test_paper_scale_counts(self):
        topo = build_topology(16)
        assert topo.n_layers == 4
        assert topo.n_mzis == 32
        assert topo.n_couplers == 64
        assert topo.n_internal_shifters == 64
        assert len(topo.external_shifters) == 24
        assert topo.n_shifters == 88

    def test_smallest_butterfly(self):
        topo = build_topology(2)
        assert topo.n_layers == 1
        assert topo.n_mzis == 1
        assert topo.n_couplers == 2
        assert len(topo.external_shifters) == 0

    def test_eight_port_reachability_and_equal_length(self):
        topo = build_topology(8)
        assert topo.n_layers == 3
        assert topo.n_mzis == 12
        # Butterfly routing: every input reaches every output through exactly
        # one path, and every path crosses one MZI (two couplers) per layer.
        counts = path_count_matrix(topo)
        assert np.all(counts == 1)

    def test_sixteen_port_single_path_routing(self):
        assert np.all(path_count_matrix(build_topology(16)) == 1)

    @pytest.mark.parametrize("bad", [0, 1, 3, 6, 12, 128])
    def test_rejects_invalid_port_counts(self, bad):
        with pytest.raises(TopologyError):
            build_topology(bad)

    def test_validate_catches_broken_matching(self):
        topo = build_topology(4)
        broken = MeshTopology(
            n_ports=4,
            layers=(((0, 1), (2, 3)), ((0, 2), (1, 2))),
            external_shifters=topo.external_shifters,
        )
        with pytest.raises(TopologyError):
            broken.validate()

    def test_file_round_trip(self, tmp_path):
        topo = build_topology(8)
        path = tmp_path / "mesh.json"
        save_topology(topo, path)
        loaded = load_topology(path)
        assert loaded == topo

    def test_checked_in_default_matches_builder(self):
        assert load_topology(default_topology_path()) == build_topology(16)


class TestThermoOptic:
    def test_zero_voltages_zero_phases(self):
        params = ThermoOpticParams()
        assert np.all(voltages_to_phases(np.zeros(10), params) == 0.0)

    def test_algebraic_inversion_to_pi(self):
        params = ThermoOpticParams(phase_per_volt_sq=0.8)
        v = np.full(4, math.sqrt(math.pi / 0.8))
        assert voltages_to_phases(v, params) == pytest.approx(np.full(4, math.pi))

    def test_elementwise_oracle(self):
        rng = np.random.default_rng(0)
        v = rng.uniform(0, 2, 88)
        params = ThermoOpticParams(phase_per_volt_sq=0.5)
        phi = voltages_to_phases(v, params)
        for k in range(88):
            assert phi[k] == pytest.approx(0.5 * v[k] ** 2, abs=1e-15)

    def test_length_mismatch(self):
        params = ThermoOpticParams(phase_offset=np.zeros(5))
        with pytest.raises(DimensionMismatchError):
            voltages_to_phases(np.zeros(4), params)

    def test_offsets_applied(self):
        params = ThermoOpticParams(phase_per_volt_sq=1.0, phase_offset=np.array([0.1, 0.2]))
        assert voltages_to_phases(np.array([1.0, 0.0]), params) == pytest.approx([1.1, 0.2])


class TestMziTransfer:
    def test_zero_phases_cross_state(self):
        m = mzi_transfer(0.0, 0.0)
        assert np.allclose(m, np.array([[0, 1j], [1j, 0]]), atol=1e-15)

    def test_pi_zero_bar_dominant(self):
        m = mzi_transfer(math.pi, 0.0)
        assert abs(abs(m[0, 0]) - abs(math.sin(math.pi / 2))) < 1e-12
        assert abs(m[0, 1]) < 1e-12

    def test_matches_direct_multiplication_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            a, b = rng.uniform(-2 * math.pi, 2 * math.pi, 2)
            m = mzi_transfer(a, b)
            ref = mzi_oracle(a, b)
            for i in range(2):
                for j in range(2):
                    assert m[i, j] == pytest.approx(ref[i][j], abs=1e-14)

    def test_always_unitary(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            m = mzi_transfer(*rng.uniform(-10, 10, 2))
            assert unitarity_error(m) < 1e-12

    def test_split_ratio_follows_phase_difference(self):
        for delta in np.linspace(0, 2 * math.pi, 17):
            m = mzi_transfer(delta, 0.0)
            assert abs(m[0, 0]) == pytest.approx(abs(math.sin(delta / 2)), abs=1e-12)


class TestComposeUnitary:
    def test_zero_phases_permutation_modulus(self):
        topo = build_topology(16)
        u = compose_unitary(topo, np.zeros(topo.n_shifters))
        mags = np.abs(u)
        assert np.allclose(np.max(mags, axis=0), 1.0, atol=1e-12)
        assert np.allclose(np.sum(mags > 0.5, axis=0), 1)
        # All-cross MZIs route port p to its bit complement.
        for i in range(16):
            assert abs(mags[i ^ 15, i] - 1.0) < 1e-12

    def test_two_port_mesh_is_one_mzi(self):
        topo = build_topology(2)
        phi = np.array([0.7, -0.3])
        assert np.allclose(compose_unitary(topo, phi), mzi_transfer(0.7, -0.3), atol=1e-14)

    @pytest.mark.parametrize("n_ports", [4, 8])
    def test_matches_pure_python_oracle(self, n_ports):
        rng = np.random.default_rng(3)
        topo = build_topology(n_ports)
        for _ in range(5):
            phi = rng.uniform(-math.pi, math.pi, topo.n_shifters)
            u = compose_unitary(topo, phi)
            ref = compose_oracle(topo, phi)
            assert np.max(np.abs(u - ref)) < 1e-12

    def test_unitarity_over_random_voltages(self):
        rng = np.random.default_rng(4)
        topo = build_topology(16)
        params = ThermoOpticParams()
        for _ in range(50):
            v = rng.uniform(0, params.v_max, topo.n_shifters)
            u = compose_unitary(topo, voltages_to_phases(v, params))
            assert unitarity_error(u) < 1e-10

    def test_dimension_mismatch(self):
        topo = build_topology(4)
        with pytest.raises(DimensionMismatchError):
            compose_unitary(topo, np.zeros(topo.n_shifters + 1))


class TestHomodyneReadout:
    @staticmethod
    def random_mesh(rng, n=16, e_ref=0.5):
        topo = build_topology(n)
        v = random_drive_voltages(topo, rng)
        return configure_mesh(topo, v, ref=ReferenceArm(e_ref=e_ref))

    def test_dark_input(self):
        rng = np.random.default_rng(5)
        mesh = self.random_mesh(rng)
        ro = homodyne_readout(mesh.u, np.zeros(16), mesh.ref)
        assert np.all(ro.i_bpd == 0.0)
        assert np.allclose(ro.i_plus, mesh.ref.e_ref**2)
        assert np.allclose(ro.i_minus, mesh.ref.e_ref**2)

    def test_zero_reference_phase_gives_real_part(self):
        rng = np.random.default_rng(6)
        mesh = self.random_mesh(rng)
        for _ in range(20):
            s = rng.integers(0, 2, 16).astype(float)
            ro = homodyne_readout(mesh.u, s, mesh.ref)
            expected = 2 * mesh.ref.e_ref * np.real(mesh.u @ s)
            assert np.max(np.abs(ro.i_bpd - expected)) < 1e-10

    def test_general_reference_phase_complex_oracle(self):
        rng = np.random.default_rng(7)
        topo = build_topology(8)
        v = random_drive_voltages(topo, rng)
        phi_ref = rng.uniform(-math.pi, math.pi, 8)
        ref = ReferenceArm(e_ref=0.7, phi_ref=phi_ref)
        u = compose_unitary(topo, voltages_to_phases(v, ThermoOpticParams()))
        for _ in range(20):
            s = rng.integers(0, 2, 8).astype(float)
            ro = homodyne_readout(u, s, ref)
            e_out = u @ s.astype(complex)
            expected = 2 * 0.7 * np.real(e_out * np.exp(-1j * phi_ref))
            assert np.max(np.abs(ro.i_bpd - expected)) < 1e-12

    def test_energy_bookkeeping(self):
        rng = np.random.default_rng(8)
        mesh = self.random_mesh(rng)
        for _ in range(20):
            s = rng.integers(0, 2, 16).astype(float)
            ro = homodyne_readout(mesh.u, s, mesh.ref)
            e_out = mesh.u @ s
            total = 2 * (mesh.ref.e_ref**2 + np.abs(e_out) ** 2)
            assert np.max(np.abs(ro.i_plus + ro.i_minus - total)) < 1e-12
            assert np.all(ro.i_plus >= -1e-15)
            assert np.all(ro.i_minus >= -1e-15)

    def test_bpd_is_mixer_difference(self):
        rng = np.random.default_rng(9)
        mesh = self.random_mesh(rng)
        s = rng.integers(0, 2, 16).astype(float)
        ro = homodyne_readout(mesh.u, s, mesh.ref)
        assert np.max(np.abs(ro.i_bpd - (ro.i_plus - ro.i_minus))) < 1e-12

    def test_linearity_for_disjoint_support(self):
        rng = np.random.default_rng(10)
        mesh = self.random_mesh(rng)
        s1 = np.zeros(16)
        s2 = np.zeros(16)
        s1[:8] = rng.integers(0, 2, 8)
        s2[8:] = rng.integers(0, 2, 8)
        r1 = homodyne_readout(mesh.u, s1, mesh.ref).i_bpd
        r2 = homodyne_readout(mesh.u, s2, mesh.ref).i_bpd
        r12 = homodyne_readout(mesh.u, s1 + s2, mesh.ref).i_bpd
        assert np.max(np.abs(r12 - (r1 + r2))) < 1e-10


class TestEffectiveMatrix:
    def test_identity_unitary(self):
        a = effective_matrix(np.eye(4, dtype=complex), ReferenceArm(e_ref=0.5))
        assert np.allclose(a, np.eye(4))

    def test_nonzero_reference_phase_rejected(self):
        ref = ReferenceArm(e_ref=0.5, phi_ref=np.array([0.0, 0.1]))
        with pytest.raises(UnsupportedConfigurationError):
            effective_matrix(np.eye(2, dtype=complex), ref)

    def test_all_zero_phases(self):
        topo = build_topology(16)
        u = compose_unitary(topo, np.zeros(topo.n_shifters))
        a = effective_matrix(u, ReferenceArm(e_ref=0.8))
        assert np.allclose(a, 2 * 0.8 * np.real(u), atol=1e-15)

    def test_sampling_oracle_against_readout(self):
        rng = np.random.default_rng(11)
        topo = build_topology(16)
        mesh = configure_mesh(topo, random_drive_voltages(topo, rng))
        worst = 0.0
        for _ in range(1000):
            s = rng.integers(0, 2, 16).astype(float)
            ro = homodyne_readout(mesh.u, s, mesh.ref)
            worst = max(worst, float(np.max(np.abs(mesh.a @ s - ro.i_bpd))))
        assert worst < 1e-10


class TestConfiguredMesh:
    def test_voltage_range_enforced(self):
        topo = build_topology(4)
        v = np.zeros(topo.n_shifters)
        v[0] = 99.0
        with pytest.raises(ValueError):
            configure_mesh(topo, v)
        with pytest.raises(ValueError):
            configure_mesh(topo, v - 100.0)

    def test_drive_pattern_touches_one_shifter_per_mzi(self):
        rng = np.random.default_rng(12)
        topo = build_topology(16)
        v = random_drive_voltages(topo, rng)
        nonzero = np.nonzero(v)[0]
        assert len(nonzero) == topo.n_mzis
        assert np.all(nonzero % 2 == 0)  # top arms only
        assert np.all(nonzero < topo.n_internal_shifters)

    def test_state_dump_contents(self):
        rng = np.random.default_rng(13)
        topo = build_topology(4)
        mesh = configure_mesh(topo, random_drive_voltages(topo, rng))
        dump = mesh_state_dict(mesh)
        assert dump["n_ports"] == 4
        assert len(dump["voltages"]) == topo.n_shifters
        assert len(dump["u"]) == 16
        assert len(dump["a"]) == 16
        u = np.array([complex(re, im) for re, im in dump["u"]]).reshape(4, 4)
        assert np.max(np.abs(u - mesh.u)) == 0.0

    def test_immutable_arrays(self):
        rng = np.random.default_rng(14)
        topo = build_topology(4)
        mesh = configure_mesh(topo, random_drive_voltages(topo, rng))
        with pytest.raises(ValueError):
            mesh.u[0, 0] = 0.0
