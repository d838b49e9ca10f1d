import numpy as np
import pytest

from errors import DegenerateDensityError, InstanceFormatError, InvalidArgumentError
from instances.density import fit_density, load_points, sample_density, sample_points, scott_bandwidth
from instances.generators import generate_uniform, uniform_set
from instances.geometry import normalized_coordinates, travel_times
from instances.storage import dumps_instance, instance_filename, load_instance_set, loads_instance, save_instance
from schemas.models import Instance


def test_uniform_generator_ranges(rng):
    inst = generate_uniform(11, 2.0, rng)
    xy = np.asarray(inst.coords)
    assert inst.n == 11 and xy.shape == (11, 2)
    assert np.all((0.0 <= xy[0]) & (xy[0] <= 1.0))
    assert np.all((1.0 <= xy[1:]) & (xy[1:] <= 100.0))


def test_uniform_set_is_deterministic_per_seed():
    a = uniform_set(6, 3, 2.0, seed=7)
    b = uniform_set(6, 3, 2.0, seed=7)
    c = uniform_set(6, 3, 2.0, seed=8)
    assert a == b
    assert a != c
    assert a[0] != a[1]


@pytest.mark.parametrize("n, alpha", [(1, 2.0), (5, 0.5)])
def test_generator_rejects_bad_sizes(rng, n, alpha):
    with pytest.raises(InvalidArgumentError):
        generate_uniform(n, alpha, rng)


def test_instance_rejects_bad_alpha():
    with pytest.raises(InvalidArgumentError):
        Instance.from_points([(0, 0), (1, 1)], alpha=0.9)


def test_travel_times_on_a_right_triangle():
    inst = Instance.from_points([(0, 0), (3, 0), (3, 4)], alpha=2.0)
    times = travel_times(inst)
    assert times.truck[0, 2] == pytest.approx(5.0)
    assert times.drone[0, 2] == pytest.approx(2.5)
    assert np.array_equal(times.truck, times.truck.T)
    assert np.all(np.diag(times.truck) == 0.0)
    assert times.scale == pytest.approx(5.0)


def test_normalized_coordinates_fit_the_unit_square(rng):
    xy = normalized_coordinates(generate_uniform(20, 2.0, rng))
    assert xy.min() >= 0.0 and xy.max() <= 1.0
    assert xy.max() == pytest.approx(1.0)


def test_instance_text_survives_a_file(tmp_path, rng):
    inst = generate_uniform(7, 2.0, rng, seed=42)
    path = save_instance(inst, tmp_path / instance_filename(0))
    assert path.name == "000.tspd"
    text = path.read_text()
    assert text.startswith("# seed 42\n7 2.0\n")
    assert loads_instance(text) == inst


def test_loads_reports_the_offending_line():
    with pytest.raises(InstanceFormatError) as err:
        loads_instance("2 2.0\n0 0\nfoo 1\n")
    assert err.value.line == 3

    with pytest.raises(InstanceFormatError) as err:
        loads_instance("3 2.0\n0 0\n1 1\n", source="short.tspd")
    assert err.value.line == 4
    assert "short.tspd:4" in str(err.value)

    with pytest.raises(InstanceFormatError) as err:
        loads_instance("only-one-token\n")
    assert err.value.line == 1


def test_load_instance_set_orders_by_name(tmp_path):
    for i, seed in enumerate([3, 1, 2]):
        save_instance(generate_uniform(4, 2.0, np.random.default_rng(seed), seed=seed), tmp_path / instance_filename(i))
    names = [name for name, _ in load_instance_set(tmp_path)]
    assert names == ["000", "001", "002"]


def test_load_instance_set_requires_files(tmp_path):
    with pytest.raises(InvalidArgumentError):
        load_instance_set(tmp_path)
    with pytest.raises(InvalidArgumentError):
        load_instance_set(tmp_path / "missing")


def test_dumps_is_stable(rng):
    inst = generate_uniform(5, 1.5, rng)
    assert dumps_instance(inst) == dumps_instance(loads_instance(dumps_instance(inst)))


# Density
def test_scott_bandwidth_formula():
    values = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
    expected = np.std(values, ddof=1) * 5 ** (-1 / 5)
    assert scott_bandwidth(values) == pytest.approx(expected)


def test_density_fit_and_sample(rng):
    points = rng.uniform(0, 100, size=(50, 2))
    model = fit_density(points)
    inst = sample_density(model, 9, rng, alpha=3.0)
    assert inst.n == 9 and inst.alpha == 3.0
    assert all(np.isfinite(c).all() for c in np.asarray(inst.coords))


def kolmogorov_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Largest gap between the two empirical distribution functions."""
    grid = np.concatenate([a, b])
    cdf_a = np.searchsorted(np.sort(a), grid, side="right") / a.size
    cdf_b = np.searchsorted(np.sort(b), grid, side="right") / b.size
    return float(np.abs(cdf_a - cdf_b).max())


def test_density_samples_follow_their_source():
    rng = np.random.default_rng(31)
    source = rng.uniform(1, 100, size=(50, 2))
    drawn = sample_points(fit_density(source), 10_000, rng)
    for axis in (0, 1):
        assert kolmogorov_distance(drawn[:, axis], source[:, axis]) <= 0.1


def test_uniform_customer_mean():
    xs = np.concatenate([np.asarray(inst.coords)[1:, 0] for inst in uniform_set(11, 1000, 2.0, seed=12)])
    assert xs.size == 10_000
    assert 48.0 <= xs.mean() <= 53.0


@pytest.mark.parametrize("alpha", [1.0, 2.0, 3.5])
def test_travel_time_matrices_are_metric(alpha):
    times = travel_times(generate_uniform(12, alpha, np.random.default_rng(int(alpha * 10))))
    truck, drone = times.truck, times.drone
    assert np.array_equal(truck, truck.T) and np.array_equal(drone, drone.T)
    # truck[i, k] <= truck[i, j] + truck[j, k] for every triple
    detour = truck[:, :, None] + truck[None, :, :]
    assert np.all(truck[:, None, :] <= detour + 1e-9)
    assert np.all(drone <= truck)
    assert np.allclose(drone * alpha, truck)


@pytest.mark.parametrize("points", [[(1.0, 1.0)], [(1.0, 2.0), (1.0, 3.0), (1.0, 5.0)]])
def test_degenerate_density(points):
    with pytest.raises(DegenerateDensityError):
        fit_density(points)


def test_load_points_skips_comments(tmp_path):
    path = tmp_path / "points.txt"
    path.write_text("# depot area\n1 2\n\n3.5 4\n")
    assert load_points(path) == [(1.0, 2.0), (3.5, 4.0)]
    path.write_text("1 2 3\n")
    with pytest.raises(InstanceFormatError):
        load_points(path)
