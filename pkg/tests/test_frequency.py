import numpy as np
import pytest

from dirpoly import BoundProfile, RegularityProfile, build, check_regularity, counting_function
from dirpoly.frequency import divisor_counts, first_n_primes, load_table, primes_up_to


def test_sieves_pinned():
    assert list(primes_up_to(30)) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert list(first_n_primes(5)) == [2, 3, 5, 7, 11]
    assert first_n_primes(1000)[-1] == 7919
    d = divisor_counts(12)
    assert list(d[[1, 2, 6, 12]]) == [1, 2, 4, 6]
    with pytest.raises(ValueError):
        first_n_primes(0)


def test_profile_families():
    unit = BoundProfile.unit()
    assert unit(1) == 1.0 and unit(10**6) == 1.0
    pw = BoundProfile.power(0.5)
    assert pw(4) == pytest.approx(2.0, rel=1e-15)
    lp = BoundProfile.logpower(2.0)
    assert lp(np.e**3) == pytest.approx(9.0, rel=1e-12)
    # below the clamp point the logpower family freezes at its n = 2 value
    assert lp(1) == lp(2) == pytest.approx(np.log(2.0) ** 2, rel=1e-15)
    ll = BoundProfile.loglog_threshold(1.5)
    n0 = ll.floor_index
    assert ll(1) == ll(n0)  # flat until the formula turns increasing
    assert ll(4 * n0) > ll(n0)

    for prof in (unit, pw, lp, ll):
        n = np.arange(1, 2001)
        vals = prof(n)
        assert np.all(vals > 0)
        assert np.all(np.diff(vals) >= 0), prof.describe()

    with pytest.raises(ValueError):
        BoundProfile.power(0.0)
    with pytest.raises(ValueError):
        BoundProfile.logpower(-1.0)
    with pytest.raises(ValueError):
        BoundProfile.loglog_threshold(0.0)
    with pytest.raises(ValueError):
        unit(0)


def test_profile_table():
    prof = BoundProfile.from_table([2, 3, 5], [1.0, 1.5, 1.5])
    assert prof(3) == 1.5
    assert list(prof(np.array([2, 5]))) == [1.0, 1.5]
    with pytest.raises(ValueError):
        prof(4)  # not in the table
    with pytest.raises(ValueError):
        BoundProfile.from_table([2, 2], [1.0, 1.0])
    with pytest.raises(ValueError):
        BoundProfile.from_table([2, 3], [1.0, 0.5])  # decreasing
    with pytest.raises(ValueError):
        BoundProfile.from_table([2, 3], [0.0, 1.0])  # nonpositive


def test_profile_describe():
    assert BoundProfile.unit().describe() == "unit"
    assert BoundProfile.power(0.5).describe() == "power:0.5"
    assert BoundProfile.logpower(2.0).describe() == "logpower:2"
    assert BoundProfile.loglog_threshold(1.5).describe() == "loglog:1.5"


def test_build_classical():
    sys_ = build("classical", BoundProfile.power(0.5), n_terms=4)
    assert list(sys_.freq.labels) == [2, 3, 4, 5]
    assert np.allclose(sys_.frequencies, np.log([2.0, 3.0, 4.0, 5.0]), rtol=0, atol=1e-15)
    assert sys_.amplitudes[0] == pytest.approx(np.sqrt(2.0) / 2.0, rel=1e-15)
    assert sys_.normalized_amplitudes[2] == pytest.approx(2.0, rel=1e-15)  # 4^{1/2}
    assert np.array_equal(sys_.denominators, [2.0, 3.0, 4.0, 5.0])


def test_build_primes_and_divisor():
    pr = build("primes", n_terms=4)
    assert list(pr.freq.labels) == [2, 3, 5, 7]
    assert pr.amplitudes[2] == pytest.approx(1.0 / 5.0, rel=1e-15)
    dv = build("divisor", n_terms=11)
    # label 6 sits at position 4; d(6) = 4
    assert dv.freq.labels[4] == 6
    assert dv.normalized_amplitudes[4] == pytest.approx(4.0, rel=1e-15)
    assert dv.normalized_amplitudes[10] == pytest.approx(6.0, rel=1e-15)  # d(12)
    assert dv.amplitudes[4] == pytest.approx(4.0 / 6.0, rel=1e-15)


def test_build_shifted():
    sh = build("shifted", n_terms=6, alpha=0.5)
    ref = np.log(np.arange(1, 7) + 0.5) - np.log(0.5)
    assert np.allclose(sh.frequencies, ref, rtol=0, atol=1e-15)
    assert sh.amplitudes[0] == pytest.approx(1.0 / 1.5, rel=1e-15)
    # alpha = 1 reproduces the classical frequencies and unit-profile bounds
    cl = build("classical", n_terms=6)
    sh1 = build("shifted", n_terms=6, alpha=1.0)
    assert np.allclose(sh1.frequencies, cl.frequencies, rtol=0, atol=1e-15)
    assert np.allclose(sh1.amplitudes, cl.amplitudes, rtol=0, atol=1e-15)
    with pytest.raises(ValueError):
        build("shifted", n_terms=3)  # alpha missing
    with pytest.raises(ValueError):
        build("shifted", n_terms=3, alpha=0.0)


def test_build_custom_and_validation():
    freq = np.array([0.7, 1.9, 4.2])
    cs = build("custom", frequencies=freq, amplitudes=[0.3, 0.2, 0.1])
    assert np.array_equal(cs.frequencies, freq)
    assert np.array_equal(cs.amplitudes, cs.normalized_amplitudes)
    # default amplitudes follow the profile on shifted labels
    cs2 = build("custom", BoundProfile.power(1.0), frequencies=freq)
    assert np.array_equal(cs2.amplitudes, [2.0, 3.0, 4.0])
    with pytest.raises(ValueError):
        build("weird", n_terms=3)
    with pytest.raises(ValueError):
        build("classical")  # n_terms missing
    with pytest.raises(ValueError):
        build("custom", frequencies=[1.0, 1.0])  # not strictly increasing
    with pytest.raises(ValueError):
        build("custom", frequencies=[-1.0, 2.0])
    with pytest.raises(ValueError):
        build("custom", frequencies=[1.0, 2.0], amplitudes=[-0.5, 1.0])


def test_head_slicing():
    sys_ = build("classical", n_terms=10)
    h = sys_.head(4)
    assert h.n_terms == 4
    assert np.array_equal(h.frequencies, sys_.frequencies[:4])
    assert np.array_equal(h.amplitudes, sys_.amplitudes[:4])
    with pytest.raises(ValueError):
        sys_.head(11)


def test_counting_function_steps():
    cs = build("custom", frequencies=[1.0, 2.0, 4.0], amplitudes=[0.5, 0.25, 0.125])
    assert counting_function(cs, 0.0) == 1.0
    assert counting_function(cs, 0.999) == 1.0
    assert counting_function(cs, 1.0) == 1.5  # right-continuous step
    assert counting_function(cs, 3.0) == 1.75
    got = counting_function(cs, np.array([0.5, 2.0, 10.0]))
    assert np.array_equal(got, [1.0, 1.75, 1.875])
    with pytest.raises(ValueError):
        counting_function(cs, -0.5)
    with pytest.raises(ValueError):
        counting_function(cs, 1.0, amplitudes="other")


def test_counting_function_vector_choice():
    sys_ = build("classical", BoundProfile.power(0.5), n_terms=50)
    x = float(sys_.frequencies[-1])
    normalized = counting_function(sys_, x)
    unimod = counting_function(sys_, x, amplitudes="unimodular")
    assert normalized == pytest.approx(1.0 + sys_.normalized_amplitudes.sum(), rel=1e-14)
    assert unimod == pytest.approx(1.0 + sys_.amplitudes.sum(), rel=1e-14)
    assert normalized > unimod


def test_regularity_profiles():
    lp = RegularityProfile.log_power(1.0)
    assert lp(np.e - 1.0) == pytest.approx(1.0, rel=1e-12)
    pw = RegularityProfile.power(0.5)
    assert pw(4.0) == pytest.approx(0.5, rel=1e-12)
    inc = lp.tail_increments(1e6)
    assert inc[0] > inc[-1] > 0  # convergent-tail window sums decay
    with pytest.raises(ValueError):
        RegularityProfile.log_power(0.0)
    with pytest.raises(ValueError):
        lp(0.0)


def test_check_regularity_classical():
    sys_ = build("classical", n_terms=600)
    rep = check_regularity(sys_, RegularityProfile.log_power(1.0), np.linspace(1.0, 5.0, 9))
    assert rep.min_ratio > 0
    assert rep.rows.shape[1] == 3
    assert np.all(rep.flagged[:, 2] < rep.floor) if rep.flagged.size else True
    lo, hi = rep.argmin
    assert 1.0 <= lo <= 5.0 and 0.0 < hi <= 1.0
    with pytest.raises(ValueError):
        check_regularity(sys_, RegularityProfile.log_power(1.0), [100.0])


def test_load_table(tmp_path):
    p = tmp_path / "tbl.txt"
    p.write_text("# comment\n2 1.0\n3 1.5\n\n5 2.0 # trailing note\n")
    idx, val = load_table(p)
    assert list(idx) == [2, 3, 5]
    assert list(val) == [1.0, 1.5, 2.0]
    bad = tmp_path / "bad.txt"
    bad.write_text("2 1.0\nthree 2.0\n")
    with pytest.raises(ValueError, match="bad.txt:2"):
        load_table(bad)
    wide = tmp_path / "wide.txt"
    wide.write_text("2 1.0 extra\n")
    with pytest.raises(ValueError, match="two columns"):
        load_table(wide)
    empty = tmp_path / "empty.txt"
    empty.write_text("# nothing\n")
    with pytest.raises(ValueError, match="no data rows"):
        load_table(empty)
