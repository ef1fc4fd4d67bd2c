import numpy as np
import pytest

from hma_xlmimo.channel import (ChannelSet, PathParams, SingularGeometryError, SubcarrierGrid, WaveguideModel,
                                draw_path_params, export_channels, full_waveguide, gain_coefficient,
                                large_scale_fading, load_channels, narrowband_copy, plane_wave_channel,
                                propagation_delay, radiation_profile, reflection_coefficient, spherical_channel,
                                synthesize, waveguide_response)
from hma_xlmimo.geometry import (SPEED_OF_LIGHT, UserLayout, build_hma_array, near_field_annulus,
                                 sample_user_layout, xz_point)

from conftest import CARRIER, WAVELENGTH as LAM


def los_user(point):
    return UserLayout(np.asarray(point, float), np.zeros((0, 3)), np.zeros(0))


def unit_params(num_users=1, paths=1):
    return PathParams(tuple(np.ones(paths) for _ in range(num_users)))


def test_propagation_delay():
    assert propagation_delay(np.zeros(3), np.array([0.0, 0.0, 3.0])) == pytest.approx(1e-8, rel=1e-15)
    assert propagation_delay(np.zeros(3), np.array([1.0, 2.0, 2.0])) == pytest.approx(1e-8, rel=1e-15)
    with pytest.raises(SingularGeometryError):
        propagation_delay(np.ones(3), np.ones(3))


def test_radiation_profile():
    assert radiation_profile(0.0) == 6.0
    assert radiation_profile(np.pi / 2, 3.0) == pytest.approx(0.0, abs=1e-40)
    assert radiation_profile(np.pi / 3) == pytest.approx(1.5, rel=1e-12)
    assert radiation_profile(2.0) == 0.0


def test_reflection_coefficient():
    assert reflection_coefficient(0, 1e8) == 1
    gamma = reflection_coefficient(1, 0.0, 0.0, refractive_index=2.24, roughness=0.0)
    assert gamma == pytest.approx((1 - 2.24) / (1 + 2.24), rel=1e-12)
    assert abs(reflection_coefficient(1, 0.0, 0.3, roughness=1.0)) < 1e-300
    # frequency vector in, vector out
    assert reflection_coefficient(2, np.array([-1e8, 0.0, 1e8]), 0.4).shape == (3,)


def test_gain_coefficient():
    f = 1e8
    d = SPEED_OF_LIGHT / (4 * np.pi * (f + CARRIER))
    assert gain_coefficient(1.0, 6.0, d, f) == pytest.approx(np.sqrt(6.0), rel=1e-12)
    assert gain_coefficient(1.0, 0.0, d, f) == 0.0
    assert gain_coefficient(0.5, 6.0, 2 * d, f) == pytest.approx(0.5 * gain_coefficient(0.5, 6.0, d, f))
    with pytest.raises(SingularGeometryError):
        gain_coefficient(1.0, 6.0, 0.0, f)


def test_large_scale_fading():
    assert large_scale_fading(1.0, None) == pytest.approx(10 ** -3.45, rel=1e-12)
    rng = np.random.default_rng(7)
    db = 10 * np.log10(large_scale_fading(np.full(100_000, 10.0), rng))
    assert db.mean() == pytest.approx(-72.5, abs=0.1)
    assert db.std() == pytest.approx(8.0, abs=0.1)


def test_subcarrier_grid_offsets():
    grid = SubcarrierGrid(CARRIER, 600e6, 12)
    assert grid.spacing == 50e6
    assert grid.frequencies[0] == pytest.approx(-325e6)
    assert grid.frequencies[-1] == pytest.approx(225e6)
    assert np.all(np.diff(grid.frequencies) > 0)
    assert grid.center_index == 6


def test_single_path_single_element():
    grid = SubcarrierGrid(CARRIER, 400e6, 4)
    element = np.array([[0.01, -0.02, 0.0]])
    point = np.array([0.05, 0.0, 0.3])
    eps = 2.5e-4
    ch = spherical_channel([los_user(point)], element, grid, PathParams((np.array([eps]),)))
    d = np.linalg.norm(point - element[0])
    theta = np.arccos((point[2] - element[0, 2]) / d)
    for s, f in enumerate(grid.frequencies):
        a = gain_coefficient(1.0, radiation_profile(theta), d, f)
        g = ch.matrices[s, 0, 0]
        assert abs(g) == pytest.approx(np.sqrt(eps) * a, rel=1e-12)
        expected = -2 * np.pi * (CARRIER + f) * d / SPEED_OF_LIGHT
        assert np.angle(g * np.exp(-1j * expected)) == pytest.approx(0.0, abs=1e-9)


def test_blocked_los_gives_zero_channel():
    arr = build_hma_array(2 * LAM, LAM)
    grid = SubcarrierGrid(CARRIER, 100e6, 3)
    ch = spherical_channel([los_user([0.0, 0.0, 0.5])], arr.positions, grid, PathParams((np.array([0.0]),)))
    assert not np.any(ch.matrices)


def test_vectorized_channel_matches_scalar_loop():
    arr = build_hma_array(2 * LAM, LAM)
    grid = SubcarrierGrid(CARRIER, 800e6, 3)
    rng = np.random.default_rng(3)
    users = sample_user_layout(rng, 2, 3, arr)
    params = draw_path_params(users, rng)
    ch = spherical_channel(users, arr.positions, grid, params)
    for s, f in enumerate(grid.frequencies):
        for u, user in enumerate(users):
            for n in (0, 17, arr.num_elements - 1):
                e = arr.positions[n]
                total = 0j
                for p, point in enumerate(user.path_points):
                    d = np.linalg.norm(point - e)
                    theta = np.arccos((point[2] - e[2]) / d)
                    inc = user.incidence_angles[p - 1] if p else 0.0
                    gamma = reflection_coefficient(p, f, inc)
                    a = gain_coefficient(abs(gamma), radiation_profile(theta), d, f)
                    total += np.sqrt(params.large_scale[u][p]) * a * np.exp(
                        -2j * np.pi * (CARRIER + f) * d / SPEED_OF_LIGHT)
                assert abs(ch.matrices[s, n, u] - total) < 1e-12


def test_plane_wave_matches_at_array_center():
    grid = SubcarrierGrid(CARRIER, 200e6, 2)
    user = [los_user(xz_point(0.4, 0.3))]
    center = np.zeros((1, 3))
    sph = spherical_channel(user, center, grid, unit_params())
    pw = plane_wave_channel(user, center, grid, unit_params())
    np.testing.assert_allclose(pw.matrices, sph.matrices, rtol=1e-13)
    assert pw.model_tag == "plane"


def _phase_gap(radius, array_length):
    arr = build_hma_array(array_length, LAM)
    grid = SubcarrierGrid(CARRIER, 100e6, 1)
    user = [los_user(xz_point(radius, 0.4))]
    sph = spherical_channel(user, arr.positions, grid, unit_params()).matrices[0, :, 0]
    pw = plane_wave_channel(user, arr.positions, grid, unit_params()).matrices[0, :, 0]
    return np.abs(np.angle(sph * pw.conj())), arr


def test_plane_wave_far_and_near_phase_mismatch():
    arr = build_hma_array(4 * LAM, LAM)
    d_f = near_field_annulus(arr)[1]
    far, _ = _phase_gap(1e6 * d_f, 4 * LAM)
    assert far.max() < 1e-3
    near, arr = _phase_gap(0.3 * d_f, 4 * LAM)
    edge = np.argmax(np.linalg.norm(arr.positions, axis=1))
    assert near[edge] > 0.1


def _at_radius(user, radius):
    def push(pts):
        return pts / np.linalg.norm(pts, axis=-1, keepdims=True) * radius
    return UserLayout(push(user.los_point), push(user.scatterer_points), user.incidence_angles)


def test_far_field_convergence():
    arr = build_hma_array(2 * LAM, LAM)
    d_f = near_field_annulus(arr)[1]
    grid = SubcarrierGrid(CARRIER, 600e6, 4)
    rng = np.random.default_rng(11)
    users = sample_user_layout(rng, 2, 3, arr)
    params = draw_path_params(users, rng)
    gaps = []
    for radius in (d_f, 10 * d_f, 100 * d_f):
        moved = [_at_radius(u, radius) for u in users]
        sph = spherical_channel(moved, arr.positions, grid, params).matrices
        pw = plane_wave_channel(moved, arr.positions, grid, params).matrices
        gaps.append(np.linalg.norm(sph - pw) / np.linalg.norm(sph))
    assert gaps[0] > gaps[1] > gaps[2]


def test_inverse_distance_scaling():
    # scaling anchors and elements together keeps every angle, so only 1/d changes
    arr = build_hma_array(2 * LAM, LAM)
    grid = SubcarrierGrid(CARRIER, 600e6, 3)
    rng = np.random.default_rng(5)
    users = [los_user(u.los_point) for u in sample_user_layout(rng, 2, 0, arr)]
    params = PathParams((np.array([1e-4]), np.array([3e-5])))
    a = np.abs(spherical_channel(users, arr.positions, grid, params).matrices)
    b = np.abs(spherical_channel([u.scaled(2.0) for u in users], 2.0 * arr.positions, grid, params).matrices)
    np.testing.assert_allclose(b, a / 2.0, rtol=1e-12)


def test_reproducible_and_seed_sensitive():
    arr = build_hma_array(2 * LAM, LAM)
    grid = SubcarrierGrid(CARRIER, 600e6, 4)

    def draw(seed):
        rng = np.random.default_rng(seed)
        users = sample_user_layout(rng, 2, 5, arr)
        return synthesize(users, arr.positions, grid, draw_path_params(users, rng))

    a, b, c = draw(4), draw(4), draw(5)
    assert a.matrices.tobytes() == b.matrices.tobytes()
    assert a.fingerprint() == b.fingerprint() != c.fingerprint()


def test_waveguide_response():
    np.testing.assert_array_equal(waveguide_response(WaveguideModel(), 0, 3), np.eye(3))
    lossless = WaveguideModel("full", attenuation=0.0, wavenumber=10.0, port_distances=np.linspace(0, 1, 4))
    np.testing.assert_allclose(np.abs(lossless.diagonal(0, 4)), 1.0)
    lossy = WaveguideModel("full", attenuation=0.5, wavenumber=10.0, port_distances=np.array([0.1]))
    assert abs(lossy.diagonal(0, 1)[0]) == pytest.approx(np.exp(-0.05), rel=1e-12)
    scaled = WaveguideModel(scalar_gains=np.array([1.0, 0.5j]))
    np.testing.assert_allclose(scaled.diagonals(2, 2), [[1, 1], [0.5j, 0.5j]])
    wg = full_waveguide(2, 3, LAM)
    assert np.all(np.abs(wg.diagonal(0, 6)) <= 1.0)
    with pytest.raises(ValueError):
        wg.diagonal(0, 5)


def test_export_round_trip(tmp_path):
    arr = build_hma_array(2 * LAM, LAM)
    grid = SubcarrierGrid(CARRIER, 600e6, 3)
    rng = np.random.default_rng(2)
    users = sample_user_layout(rng, 2, 1, arr)
    ch = spherical_channel(users, arr.positions, grid, draw_path_params(users, rng))
    export_channels(ch, tmp_path, {"seed": 2})
    back = load_channels(tmp_path)
    np.testing.assert_array_equal(back.matrices, ch.matrices)
    assert back.grid == grid and back.model_tag == "spherical"


def test_narrowband_copy_repeats_center():
    grid = SubcarrierGrid(CARRIER, 600e6, 4)
    g = np.arange(4 * 3 * 2).reshape(4, 3, 2).astype(complex)
    nb = narrowband_copy(ChannelSet(g, grid))
    for s in range(4):
        np.testing.assert_array_equal(nb.matrices[s], g[2])


def test_channel_set_validation():
    grid = SubcarrierGrid(CARRIER, 600e6, 2)
    with pytest.raises(ValueError):
        ChannelSet(np.zeros((3, 2, 1), complex), grid)
    with pytest.raises(ValueError):
        ChannelSet(np.full((2, 2, 1), np.nan, complex), grid)
    with pytest.raises(ValueError):
        synthesize([], np.zeros((1, 3)), grid, PathParams(()), model="ray")
