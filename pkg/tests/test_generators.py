import numpy as np
import pytest

from regime_split import AR1, GeneratorSpec, MulticlassMixture, MVGaussianMixture, ShiftMixture, SwitchingRegression, VarianceMixture, generate
from regime_split.core import Sample, VectorSample
from regime_split.generators import InvalidSpec, draw, rng_stream
from regime_split.regression import RegressionData

MODELS = [
    ShiftMixture(0.1, 2.0),
    VarianceMixture(0.05, 3.0),
    MulticlassMixture((0.3, 0.15), (1.0, 3.0, 7.0), B=2.0),
    AR1(0.5),
    MVGaussianMixture((0.3, 0.15), ((0, 0), (1, 2), (2, 3)), ((0.745, -0.07), (-0.07, 0.51))),
    SwitchingRegression((1, 1), (1, 2), 0.05),
    SwitchingRegression((1, 1), (1, 2), 0.05, panel=10),
]


def _arrays(data):
    if isinstance(data, RegressionData):
        return [data.X, data.y]
    return [np.asarray(data)]


@pytest.mark.parametrize("model", MODELS, ids=lambda m: type(m).__name__)
class TestEveryModel:
    def test_reproducible(self, model):
        a, la = draw(model, 50, 3, 1, 2)
        b, lb = draw(model, 50, 3, 1, 2)
        assert all(np.array_equal(x, y) for x, y in zip(_arrays(a), _arrays(b)))
        assert np.array_equal(la, lb)

    def test_streams_differ(self, model):
        a, _ = draw(model, 50, 3, 1, 2)
        b, _ = draw(model, 50, 3, 1, 3)
        assert not all(np.array_equal(x, y) for x, y in zip(_arrays(a), _arrays(b)))

    def test_label_length(self, model):
        _, lab = draw(model, 40, 0)
        assert lab.shape == (40,)

    def test_generate_wraps(self, model):
        g = generate(GeneratorSpec(model, 30, 1))
        assert isinstance(g.data, (Sample, VectorSample, RegressionData))


def test_stream_is_pcg64_seed_sequence():
    want = np.random.Generator(np.random.PCG64(np.random.SeedSequence(7, spawn_key=(1, 2)))).random(5)
    assert np.array_equal(rng_stream(7, 1, 2).random(5), want)


def test_no_switches_all_ordinary():
    _, lab = draw(ShiftMixture(0.0, 5.0), 100, 1)
    assert not lab.any()


def test_fraction_law_of_large_numbers():
    _, lab = draw(ShiftMixture(0.1, 2.0), 100_000, 2)
    assert abs(lab.mean() - 0.1) <= 0.005


def test_mixture_mean():
    x, _ = draw(ShiftMixture(0.1, 2.0), 200_000, 3)
    assert abs(x.mean() - 0.2) <= 0.01


def test_variance_components():
    x, lab = draw(VarianceMixture(0.2, 3.0), 100_000, 4)
    assert x[lab == 0].std() == pytest.approx(1.0, abs=0.02)
    assert x[lab == 1].std() == pytest.approx(3.0, abs=0.06)


def test_ar1_white_noise_acf():
    n = 10_000
    x, _ = draw(AR1(0.0), n, 5)
    x = x - x.mean()
    r1 = np.dot(x[1:], x[:-1]) / np.dot(x, x)
    assert abs(r1) <= 3 / np.sqrt(n)


def test_ar1_acf():
    x, _ = draw(AR1(0.6), 50_000, 6)
    x = x - x.mean()
    assert np.dot(x[1:], x[:-1]) / np.dot(x, x) == pytest.approx(0.6, abs=0.02)


def test_multivariate_covariance():
    cov = ((0.745, -0.07), (-0.07, 0.51))
    v, _ = draw(MVGaussianMixture((0.0,), ((0, 0), (1, 1)), cov), 100_000, 7)
    assert np.allclose(np.cov(v.T), cov, atol=0.02)


def test_panel_shape():
    d, lab = draw(SwitchingRegression((1, 1), (1, 2), 0.5, panel=12), 30, 8)
    assert d.X.shape == (12, 2) and d.y.shape == (12, 30) and lab.shape == (30,)


@pytest.mark.parametrize(
    "build",
    [
        lambda: ShiftMixture(1.0, 1.0),
        lambda: ShiftMixture(0.1, 1.0, sigma=0.0),
        lambda: MulticlassMixture((0.6, 0.5), (0, 1, 2)),
        lambda: MulticlassMixture((0.1,), (0, 1, 2)),
        lambda: MulticlassMixture((0.1, 0.1), (1, 2, 7), B=2.0),
        lambda: AR1(1.0),
        lambda: MVGaussianMixture((0.1,), ((0, 0), (1, 1)), ((1, 2), (2, 1))),
        lambda: MVGaussianMixture((0.1,), ((0, 0), (1, 1)), ((1, 0.5), (0.4, 1))),
        lambda: SwitchingRegression((1, 1, 1), (1, 2, 1), 0.1),
    ],
)
def test_invalid(build):
    with pytest.raises(InvalidSpec):
        build()


def test_unknown_model():
    with pytest.raises(InvalidSpec):
        GeneratorSpec(object(), 10)
