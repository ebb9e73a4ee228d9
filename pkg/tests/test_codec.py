import itertools
import math

import numpy as np
import pytest

from swstream.codec import (
    BinningSchedule,
    CandidateOverflowError,
    CandidateSet,
    ParityStream,
    candidate_set_for,
    compute_scores,
    encode_step,
    enumerate_bin,
    initial_candidates,
    ml_decode,
    si_decode_ml,
    si_decode_universal,
    sw_ml_decode,
    sw_universal_decode,
    universal_decode,
    update_candidates,
)
from swstream.info_core import (
    JointDistribution,
    entropy_of_counts,
    weighted_suffix_entropy,
)
from swstream.sim import sample_source

ONE_BIT = BinningSchedule((1,))
TWO_BITS = BinningSchedule((2,))


class TestBinningSchedule:
    def test_validation(self):
        with pytest.raises(ValueError):
            BinningSchedule(())
        with pytest.raises(ValueError):
            BinningSchedule((1, -1))
        with pytest.raises(ValueError):
            BinningSchedule((0, 0))

    def test_periodic_pattern(self):
        s = BinningSchedule((2, 1, 1, 1))
        assert [s.bits_at(j) for j in range(1, 9)] == [2, 1, 1, 1, 2, 1, 1, 1]
        assert s.total_bits(6) == 5 + 2 + 1
        assert s.average_rate_bits == pytest.approx(1.25)

    def test_total_bits_matches_sum(self):
        s = BinningSchedule((3, 0, 1))
        for n in range(0, 10):
            assert s.total_bits(n) == sum(s.bits_at(j) for j in range(1, n + 1))


class TestEncodeStep:
    def test_deterministic(self):
        a = encode_step(7, "x", b"\x01\x00\x01", ONE_BIT)
        b = encode_step(7, "x", b"\x01\x00\x01", ONE_BIT)
        assert a == b
        assert len(a) == 1 and a[0] in (0, 1)

    def test_distinct_keys_decorrelate(self):
        bits_by_key = {
            (seed, sid): tuple(
                encode_step(seed, sid, bytes([v]), ONE_BIT)[0] for v in range(32)
            )
            for seed in (1, 2)
            for sid in ("x", "y")
        }
        vals = list(bits_by_key.values())
        assert len(set(vals)) == len(vals)

    def test_prefix_consistency(self):
        # sequences sharing a prefix share the parities of the shared steps
        s1, s2 = b"\x00\x01\x00", b"\x00\x01\x01"
        for j in (1, 2):
            assert encode_step(3, "x", s1[:j], ONE_BIT) == encode_step(
                3, "x", s2[:j], ONE_BIT
            )
        # ...and generically differ once they diverge (checked over seeds)
        diverged = sum(
            encode_step(s, "x", s1, TWO_BITS) != encode_step(s, "x", s2, TWO_BITS)
            for s in range(200)
        )
        assert diverged > 100

    def test_zero_bit_step_emits_nothing(self):
        s = BinningSchedule((1, 0))
        assert encode_step(5, "x", b"\x00\x01", s) == ()
        assert len(encode_step(5, "x", b"\x00", s)) == 1

    def test_empty_prefix_rejected(self):
        with pytest.raises(ValueError):
            encode_step(5, "x", b"", ONE_BIT)

    def test_bits_unbiased(self):
        # fraction of 1s over many seeds is 1/2 +- 0.02
        ones = sum(
            encode_step(seed, "x", b"\x00\x01", ONE_BIT)[0] for seed in range(10_000)
        )
        assert abs(ones / 10_000 - 0.5) < 0.02

    def test_wide_alphabet_guard(self):
        # 256 symbols x 2 bits would need 512 bits of PRF output
        with pytest.raises(ValueError):
            encode_step(1, "x", bytes([255]), TWO_BITS)
        # 1 bit per symbol at alphabet 256 exactly fits
        assert encode_step(1, "x", bytes([255]), ONE_BIT) in ((0,), (1,))


class TestParityStream:
    def test_concatenates_steps(self):
        seq = b"\x01\x00\x01\x01"
        ps = ParityStream.from_sequence(11, "x", seq, BinningSchedule((2, 1)))
        assert ps.steps == 4
        assert len(ps.bits) == 6
        assert ps.bits_for_step(1) == ps.bits[0:2]
        assert ps.bits_for_step(2) == ps.bits[2:3]

    def test_accepts_lists(self):
        assert (
            ParityStream.from_sequence(11, "x", [1, 0], ONE_BIT).bits
            == ParityStream.from_sequence(11, "x", b"\x01\x00", ONE_BIT).bits
        )


class TestCandidateSets:
    def test_initial_state(self):
        c = initial_candidates(1, "x", ONE_BIT, 2)
        assert c.prefixes == (b"",) and c.step == 0

    def test_alphabet_bounds(self):
        with pytest.raises(ValueError):
            initial_candidates(1, "x", ONE_BIT, 1)
        with pytest.raises(ValueError):
            initial_candidates(1, "x", ONE_BIT, 257)

    def test_true_sequence_always_survives(self):
        rng = np.random.default_rng(5)
        for trial in range(20):
            seq = bytes(rng.integers(0, 2, size=10).tolist())
            cands = candidate_set_for(trial, "x", seq, ONE_BIT)
            assert seq in cands.prefixes

    def test_zero_bit_step_keeps_all_children(self):
        s = BinningSchedule((0, 1))
        c = initial_candidates(9, "x", s, 2)
        c = update_candidates(c, ())
        assert sorted(c.prefixes) == [b"\x00", b"\x01"]

    def test_wrong_bit_count_rejected(self):
        c = initial_candidates(9, "x", ONE_BIT, 2)
        with pytest.raises(ValueError):
            update_candidates(c, (0, 1))

    def test_expected_one_survivor_per_parent(self):
        # 1 bit/symbol on a binary alphabet: each spurious prefix has two
        # children, each surviving with probability 1/2 -- expected growth
        # factor 1.  The true path always survives and sheds an extra
        # sibling with probability 1/2 per step, so the mean bin size after
        # n steps is 1 + n/2.  Averaged over seeds at n = 8: about 5.
        total = 0
        for seed in range(300):
            c = candidate_set_for(seed, "x", b"\x00" * 8, ONE_BIT)
            total += len(c.prefixes)
        assert 4.0 < total / 300 < 6.0

    def test_rate_excess_shrinks_set(self):
        # 2 bits/symbol on binary symbols: spurious survivors have expected
        # growth factor 1/2, so the bin stays O(1) instead of growing
        # linearly as it does at 1 bit/symbol
        mean_two = np.mean([
            len(candidate_set_for(seed, "x", b"\x01\x00" * 5, TWO_BITS).prefixes)
            for seed in range(100)
        ])
        mean_one = np.mean([
            len(candidate_set_for(seed, "x", b"\x01\x00" * 5, ONE_BIT).prefixes)
            for seed in range(100)
        ])
        assert 1.0 <= mean_two < 2.5
        assert mean_one > 2 * mean_two

    def test_overflow_raises(self):
        # 1 bit every 4 steps at alphabet 2 grows ~2^{3n/4}
        sparse = BinningSchedule((1, 0, 0, 0))
        with pytest.raises(CandidateOverflowError):
            candidate_set_for(0, "x", b"\x00" * 16, sparse, cap=100)

    def test_matches_exhaustive_bin(self):
        for seed in range(10):
            seq = bytes((seed * 7 + i) % 2 for i in range(7))
            fast = sorted(candidate_set_for(seed, "x", seq, ONE_BIT).prefixes)
            slow = sorted(enumerate_bin(seed, "x", ONE_BIT, 2, seq))
            assert fast == slow

    def test_matches_exhaustive_bin_quaternary(self):
        seq = bytes([0, 3, 1, 2, 3])
        fast = sorted(candidate_set_for(4, "x", seq, TWO_BITS, alphabet=4).prefixes)
        slow = sorted(enumerate_bin(4, "x", TWO_BITS, 4, seq))
        assert fast == slow


# ---------------------------------------------------------------------------
# Reference decoders built directly from the definitions, used as oracles.
# ---------------------------------------------------------------------------


def _oracle_ml(members, px, n, delay):
    logp = [math.log(v) if v > 0 else -math.inf for v in px]

    def ll(seq):
        return sum(
            seq.count(a) * logp[a] for a in range(len(px)) if seq.count(a)
        )

    best = min(members, key=lambda s: (-ll(s), s))
    return best[: n - delay]


def _oracle_universal(members, n, delay):
    decided = b""
    pool = list(members)
    for l in range(1, n - delay + 1):
        pool = [c for c in pool if c.startswith(decided)]

        def h(c):
            window = c[l - 1 :]
            return entropy_of_counts(
                [window.count(a) for a in set(window)], len(window)
            )

        best = min(pool, key=lambda c: (h(c), c))
        decided = best[:l]
    return decided


def _oracle_si_ml(members, y, d, n, delay):
    p = d.probs

    def ll(seq):
        # summed over sorted pair counts so candidates of the same joint
        # type tie bit-exactly, matching the production convention
        counts = {}
        for pair in zip(seq, y):
            counts[pair] = counts.get(pair, 0) + 1
        total = 0.0
        for a, b in sorted(counts):
            if p[a, b] <= 0:
                return -math.inf
            total += counts[a, b] * math.log(p[a, b])
        return total

    best = min(members, key=lambda s: (-ll(s), s))
    return best[: n - delay]


def _oracle_si_universal(members, y, n, delay):
    decided = b""
    pool = list(members)
    for l in range(1, n - delay + 1):
        pool = [c for c in pool if c.startswith(decided)]

        def h(c):
            counts = {}
            for pair in zip(c[l - 1 :], y[l - 1 :]):
                counts[pair] = counts.get(pair, 0) + 1
            return entropy_of_counts(counts.values(), n - l + 1)

        best = min(pool, key=lambda c: (h(c), c))
        decided = best[:l]
    return decided


def _oracle_scores(pair, members_x, members_y, n):
    """Marked-cell scores recomputed straight from the definition."""
    x_bar, y_bar = pair

    def div(a, b):
        for i in range(n):
            if a[i] != b[i]:
                return i + 1
        return n + 1

    i_x = i_y = n + 1
    for x_t in members_x:
        for y_t in members_y:
            l, k = div(x_t, x_bar), div(y_t, y_bar)
            if l == n + 1 and k == n + 1:
                continue
            if weighted_suffix_entropy(
                x_t, y_t, l, k, n
            ) <= weighted_suffix_entropy(x_bar, y_bar, l, k, n):
                i_x = min(i_x, l - 1)
                i_y = min(i_y, k - 1)
    return i_x, i_y


class TestSingleStreamDecoders:
    N = 8

    def _bins(self, count, seed0=0):
        rng = np.random.default_rng(77)
        out = []
        for t in range(count):
            seq = bytes(rng.integers(0, 2, size=self.N).tolist())
            cands = candidate_set_for(seed0 + t, "x", seq, ONE_BIT)
            out.append((seq, cands))
        return out

    def test_ml_matches_oracle(self):
        px = [0.9, 0.1]
        model = JointDistribution.from_marginal(px)
        for seq, cands in self._bins(200):
            for delay in (0, 2):
                got = ml_decode(cands, model, delay)
                want = _oracle_ml(list(cands.prefixes), px, self.N, delay)
                assert got == want

    def test_universal_matches_oracle(self):
        for seq, cands in self._bins(200, seed0=1000):
            for delay in (0, 3):
                got = universal_decode(cands, delay)
                want = _oracle_universal(list(cands.prefixes), self.N, delay)
                assert got == want

    def test_si_ml_matches_oracle(self):
        d = JointDistribution.from_matrix([[0.45, 0.05], [0.05, 0.45]])
        rng = np.random.default_rng(31)
        for t in range(100):
            x, y = sample_source(d, self.N, int(rng.integers(1 << 30)))
            cands = candidate_set_for(t, "x", x, ONE_BIT)
            got = si_decode_ml(cands, y, d, 0)
            want = _oracle_si_ml(list(cands.prefixes), y, d, self.N, 0)
            assert got == want

    def test_si_universal_matches_oracle(self):
        d = JointDistribution.from_matrix([[0.45, 0.05], [0.05, 0.45]])
        rng = np.random.default_rng(13)
        for t in range(100):
            x, y = sample_source(d, self.N, int(rng.integers(1 << 30)))
            cands = candidate_set_for(t, "x", x, ONE_BIT)
            for delay in (0, 2):
                got = si_decode_universal(cands, y, delay)
                want = _oracle_si_universal(list(cands.prefixes), y, self.N, delay)
                assert got == want

    def test_full_delay_returns_empty(self):
        _, cands = self._bins(1)[0]
        assert ml_decode(cands, JointDistribution.from_marginal([0.5, 0.5]), self.N) == b""
        assert universal_decode(cands, self.N) == b""

    def test_singleton_bin_decodes_itself(self):
        seq = b"\x01\x00\x01"
        cands = CandidateSet(seed=0, stream_id="x", schedule=ONE_BIT,
                             alphabet=2, prefixes=(seq,), step=3)
        assert ml_decode(cands, JointDistribution.from_marginal([0.2, 0.8]), 0) == seq
        assert universal_decode(cands, 0) == seq

    def test_delay_out_of_range(self):
        _, cands = self._bins(1)[0]
        with pytest.raises(ValueError):
            ml_decode(cands, JointDistribution.from_marginal([0.5, 0.5]), self.N + 1)

    def test_delay_nesting(self):
        # the delay-d estimate is the prefix of the delay-0 estimate
        model = JointDistribution.from_marginal([0.8, 0.2])
        for seq, cands in self._bins(50, seed0=2000):
            full = ml_decode(cands, model, 0)
            for d in range(1, self.N + 1):
                assert ml_decode(cands, model, d) == full[: self.N - d]


class TestScoreBoard:
    def test_no_rivals_max_score(self):
        n = 4
        cx = CandidateSet(seed=0, stream_id="x", schedule=ONE_BIT, alphabet=2,
                          prefixes=(b"\x00" * n,), step=n)
        cy = CandidateSet(seed=0, stream_id="y", schedule=ONE_BIT, alphabet=2,
                          prefixes=(b"\x01" * n,), step=n)
        board = compute_scores((b"\x00" * n, b"\x01" * n), cx, cy, n)
        assert board.marks == frozenset()
        assert board.i_x == board.i_y == n + 1

    def test_tying_rival_marks_cell(self):
        # a rival pair that diverges at (1, 1) with identical weighted suffix
        # entropy still marks: scores drop to 0
        n = 2
        cx = CandidateSet(seed=0, stream_id="x", schedule=ONE_BIT, alphabet=2,
                          prefixes=(b"\x00\x00", b"\x01\x01"), step=n)
        cy = CandidateSet(seed=0, stream_id="y", schedule=ONE_BIT, alphabet=2,
                          prefixes=(b"\x00\x00", b"\x01\x01"), step=n)
        board = compute_scores((b"\x00\x00", b"\x00\x00"), cx, cy, n)
        assert (1, 1) in board.marks
        assert board.i_x == 0 and board.i_y == 0

    def test_matches_definition_on_random_bins(self):
        d = JointDistribution.from_matrix([[0.1, 0.05], [0.05, 0.8]])
        rng = np.random.default_rng(99)
        n = 6
        for t in range(30):
            x, y = sample_source(d, n, int(rng.integers(1 << 30)))
            cx = candidate_set_for(t, "x", x, ONE_BIT)
            cy = candidate_set_for(t, "y", y, ONE_BIT)
            for x_bar in cx.prefixes:
                for y_bar in cy.prefixes:
                    board = compute_scores((x_bar, y_bar), cx, cy, n)
                    want = _oracle_scores(
                        (x_bar, y_bar), cx.prefixes, cy.prefixes, n
                    )
                    assert (board.i_x, board.i_y) == want


class TestTwoEncoderDecoders:
    N = 6

    def test_universal_matches_definition(self):
        # winners recomputed by exhaustively maximizing the oracle scores
        d = JointDistribution.from_matrix([[0.1, 0.05], [0.05, 0.8]])
        rng = np.random.default_rng(123)
        for t in range(50):
            x, y = sample_source(d, self.N, int(rng.integers(1 << 30)))
            cx = candidate_set_for(t, "x", x, ONE_BIT)
            cy = candidate_set_for(t, "y", y, ONE_BIT)
            got = sw_universal_decode(cx, cy, self.N, 0)

            best_ix, best_iy = {}, {}
            for xb in cx.prefixes:
                for yb in cy.prefixes:
                    ix, iy = _oracle_scores((xb, yb), cx.prefixes, cy.prefixes, self.N)
                    best_ix[xb] = max(best_ix.get(xb, -1), ix)
                    best_iy[yb] = max(best_iy.get(yb, -1), iy)
            want_x = min(c for c, v in best_ix.items() if v == max(best_ix.values()))
            want_y = min(c for c, v in best_iy.items() if v == max(best_iy.values()))
            assert got == (want_x, want_y)

    def test_ml_matches_product_argmax(self):
        d = JointDistribution.from_matrix([[0.1, 0.05], [0.05, 0.8]])
        rng = np.random.default_rng(321)
        p = d.probs
        for t in range(50):
            x, y = sample_source(d, self.N, int(rng.integers(1 << 30)))
            cx = candidate_set_for(t, "x", x, ONE_BIT)
            cy = candidate_set_for(t, "y", y, ONE_BIT)
            got = sw_ml_decode(cx, cy, d, 0)

            def ll(pair):
                return sum(
                    math.log(p[a, b]) for a, b in zip(pair[0], pair[1])
                )

            want = min(
                itertools.product(cx.prefixes, cy.prefixes),
                key=lambda pr: (-ll(pr), pr),
            )
            assert got == want

    def test_ml_independent_source_factorizes(self):
        # independent x, y: the joint argmax is the pair of marginal argmaxes
        px, py = [0.3, 0.7], [0.6, 0.4]
        d = JointDistribution.from_matrix(np.outer(px, py))
        rng = np.random.default_rng(17)
        for t in range(30):
            x, y = sample_source(d, self.N, int(rng.integers(1 << 30)))
            cx = candidate_set_for(t, "x", x, ONE_BIT)
            cy = candidate_set_for(t, "y", y, ONE_BIT)
            jx, jy = sw_ml_decode(cx, cy, d, 0)
            assert jx == ml_decode(cx, JointDistribution.from_marginal(px), 0)
            assert jy == ml_decode(cy, JointDistribution.from_marginal(py), 0)

    def test_full_delay_empty_estimates(self):
        d = JointDistribution.from_matrix([[0.45, 0.05], [0.05, 0.45]])
        x, y = sample_source(d, self.N, 5)
        cx = candidate_set_for(8, "x", x, ONE_BIT)
        cy = candidate_set_for(8, "y", y, ONE_BIT)
        assert sw_universal_decode(cx, cy, self.N, self.N) == (b"", b"")
        assert sw_ml_decode(cx, cy, d, self.N) == (b"", b"")
