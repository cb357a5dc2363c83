import numpy as np

from blpc.prng import Rng, next_double, next_u64, seed_state

M64 = (1 << 64) - 1


def ref_splitmix(seed):
    """Independent splitmix64 per the published reference sequence."""
    state = seed & M64

    def nxt():
        nonlocal state
        state = (state + 0x9E3779B97F4A7C15) & M64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & M64
        return z ^ (z >> 31)

    return nxt


def ref_xoshiro(state):
    """Independent xoshiro256** step on 4 python ints."""
    def rotl(x, k):
        return ((x << k) | (x >> (64 - k))) & M64

    s = list(state)
    result = (rotl((s[1] * 5) & M64, 7) * 9) & M64
    t = (s[1] << 17) & M64
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = rotl(s[3], 45)
    return result, s


def test_seed_state_is_splitmix():
    for seed in (0, 1, 42, 2**63, M64):
        sm = ref_splitmix(seed)
        expect = [sm() for _ in range(4)]
        got = seed_state(seed)
        assert got.dtype == np.uint64
        assert [int(x) for x in got] == expect


def test_next_u64_matches_reference():
    state = seed_state(123)
    ref = [int(x) for x in state]
    for _ in range(1000):
        want, ref = ref_xoshiro(ref)
        assert int(next_u64(state)) == want


def test_next_double_unit_interval():
    state = seed_state(9)
    vals = [next_double(state) for _ in range(10000)]
    assert all(0.0 <= v < 1.0 for v in vals)
    # 53-bit construction: u64 >> 11 scaled by 2^-53
    state2 = seed_state(9)
    for v in vals[:50]:
        assert v == (int(next_u64(state2)) >> 11) * 2.0**-53


def test_rng_streams_independent_of_call_pattern():
    a = Rng(5)
    b = Rng(5)
    xs = [a.double() for _ in range(6)]
    ys = list(b.fill_uniform(6, 0.0, 1.0))
    assert xs == ys


def test_rng_uniform_range():
    r = Rng(11)
    arr = r.fill_uniform(5000, -0.1, 0.1)
    assert arr.min() >= -0.1 and arr.max() <= 0.1
    # mean near zero for a symmetric range
    assert abs(arr.mean()) < 0.005


def test_numba_rng_matches_python():
    from blpc import kernels

    kb = kernels.numba_backend if kernels.HAVE_NUMBA else \
        kernels.numpy_backend
    state_py = seed_state(77)
    state_nb = seed_state(77)
    for _ in range(500):
        assert next_u64(state_py) == kb.rng_next_u64(state_nb)
    assert np.array_equal(state_py, state_nb)
    for _ in range(200):
        assert next_double(state_py) == kb.rng_next_double(state_nb)
    out = np.empty(64, np.float32)
    kb.rng_fill_uniform(state_nb, out, -2.0, 2.0)
    ref = np.array([-2.0 + 4.0 * next_double(state_py) for _ in range(64)],
                   np.float32)
    assert np.array_equal(out, ref)
