import dataclasses
import json
import math

import numpy as np
import pytest

from pmcts import engine, envs, evaluators, harness, oracle, rng
from pmcts.engine import SearchConfig
from pmcts.errors import ConfigError, EstimationError, ValidationError


def agent(label, **kw):
    return harness.Agent(label, SearchConfig(**kw))


CLIFF_ENV = {"name": "cliff_grid"}
TTT_ENV = {"name": "tictactoe"}


class TestSpecValidation:
    def test_rejects_bad_specs(self):
        with pytest.raises(ConfigError):
            harness.ExperimentSpec(CLIFF_ENV, []).validate()
        with pytest.raises(ConfigError):
            harness.ExperimentSpec(CLIFF_ENV, [agent("a")], metric="vibes").validate()
        with pytest.raises(ConfigError):
            harness.ExperimentSpec(CLIFF_ENV, [agent("a")], episodes=0).validate()
        with pytest.raises(ConfigError):
            harness.ExperimentSpec(CLIFF_ENV, [agent("a"), agent("a")]).validate()
        with pytest.raises(ConfigError):
            harness.ExperimentSpec(CLIFF_ENV, [agent("a")],
                                   metric="bayes_elo").validate()


class TestBuildEvaluator:
    def test_kinds(self, cliff):
        assert isinstance(harness.build_evaluator(cliff, {"kind": "exact"}, 0),
                          evaluators.ExactEvaluator)
        noisy = harness.build_evaluator(cliff, {"kind": "noisy", "sigma": 0.7}, 0)
        assert isinstance(noisy, evaluators.NoisyEvaluator) and noisy.sigma == 0.7
        biased = harness.build_evaluator(cliff, {"kind": "biased"}, 0)
        assert isinstance(biased, evaluators.BiasedEvaluator)
        roll = harness.build_evaluator(cliff, {"kind": "rollout",
                                               "rollouts_per_leaf": 2}, 0)
        assert isinstance(roll, evaluators.RolloutEvaluator)
        assert roll.rollouts_per_leaf == 2

    def test_unknown_kind(self, cliff):
        with pytest.raises(ConfigError):
            harness.build_evaluator(cliff, {"kind": "psychic"}, 0)


class TestEpisodes:
    def test_episode_return_matches_manual_replay(self, cliff, cliff_exact):
        cfg = SearchConfig(simulations=8, particles=2, seed=0)
        rec = harness.run_episode(cliff, cliff_exact, cfg, episode_seed=314)

        state, rewards = cliff.initial_state, []
        for move in range(cliff.max_episode_length):
            if cliff.is_terminal(state):
                break
            sub = dataclasses.replace(cfg, seed=rng.fold_key(314, move))
            res = engine.run_search(cliff, cliff_exact, state, sub)
            state, r, _ = cliff.transition(state, res.action)
            rewards.append(r)
        total = 0.0
        for r in reversed(rewards):
            total = r + cliff.discount * total
        assert rec.ret == pytest.approx(total, rel=1e-12)
        assert not rec.truncated

    def test_summarize_returns_hand_case(self):
        records = [harness.EpisodeRecord("a", "e", 1, 1, 0, i, float(v),
                                         0, 0, 0, 1.0, 1.0)
                   for i, v in enumerate([1.0, 2.0, 3.0])]
        stats = harness.summarize_returns(records)
        assert stats.mean == pytest.approx(2.0)
        assert stats.sem == pytest.approx(1.0 / math.sqrt(3.0), rel=1e-12)
        assert stats.half_width == pytest.approx(2.0 / math.sqrt(3.0), rel=1e-12)
        assert stats.episodes == 3

    def test_identical_agents_identical_statistics(self):
        spec = harness.ExperimentSpec(
            CLIFF_ENV,
            [agent("one", simulations=4, particles=2, seed=0),
             agent("two", simulations=4, particles=2, seed=0)],
            episodes=4, seed=5)
        out = harness.run_episodes(spec)
        assert out["one"].mean == out["two"].mean
        assert [r.ret for r in out["one"].records] == \
            [r.ret for r in out["two"].records]
        assert len(out["one"].records) == 4

    def test_two_player_env_rejected(self):
        spec = harness.ExperimentSpec(TTT_ENV, [agent("a")], episodes=1)
        with pytest.raises(ValidationError):
            harness.run_episodes(spec)


class TestEmission:
    def records(self):
        return [harness.EpisodeRecord("a", "cliff_grid", 2, 8, 11, i,
                                      -0.123456789123 + i, 1.5, 2.5, 0.5,
                                      1.75, 1.9)
                for i in range(3)]

    def test_csv_round_trip_preserves_returns_exactly(self, tmp_path):
        path = str(tmp_path / "out.csv")
        harness.emit_results(self.records(), "csv", path)
        rows = harness.load_records(path)
        assert len(rows) == 3
        assert list(rows[0].keys()) == harness.CSV_COLUMNS
        for i, row in enumerate(rows):
            assert float(row["return"]) == -0.123456789123 + i
            assert row["agent"] == "a" and int(row["N"]) == 2

    def test_json_mirror(self, tmp_path):
        path = str(tmp_path / "out.json")
        harness.emit_results(self.records(), "json", path)
        with open(path) as fh:
            rows = json.load(fh)
        assert len(rows) == 3 and rows[1]["episode"] == 1

    def test_unknown_format_and_bad_path(self, tmp_path):
        with pytest.raises(ConfigError):
            harness.emit_results(self.records(), "xml", str(tmp_path / "x"))
        with pytest.raises(OSError, match="cannot write results"):
            harness.emit_results(self.records(), "csv",
                                 str(tmp_path / "missing" / "x.csv"))


class TestWinMatrix:
    def test_aggregation_over_seatings(self):
        m = harness.WinMatrix.zeros(["a", "b"])
        m.first_wins[0, 1] = 3       # a first, a wins
        m.first_draws[0, 1] = 1
        m.first_losses[0, 1] = 2
        m.first_wins[1, 0] = 1       # b first, b wins
        m.first_draws[1, 0] = 2
        m.first_losses[1, 0] = 3     # b first, a wins
        assert m.total_wins(0, 1) == 6
        assert m.total_wins(1, 0) == 3
        assert m.total_draws(0, 1) == 3
        assert m.games(0, 1) == 12


def decisive_matrix(labels, wins):
    """Matrix from {(i, j): games i won with the first seat}."""
    m = harness.WinMatrix.zeros(labels)
    for (i, j), n in wins.items():
        m.first_wins[i, j] = n
    return m


class TestBayesElo:
    def test_even_match_is_flat(self):
        m = decisive_matrix(["a", "b"], {(0, 1): 50, (1, 0): 50})
        fit = harness.fit_bayes_elo(m)
        assert fit.ratings[0] == 0.0
        assert fit.ratings[1] == pytest.approx(0.0, abs=1e-8)

    def test_76_percent_is_about_200_elo(self):
        m = decisive_matrix(["a", "b"], {(0, 1): 76, (1, 0): 24})
        fit = harness.fit_bayes_elo(m)
        assert fit.ratings[1] == pytest.approx(-harness.elo_difference(0.76),
                                               abs=1e-6)

    def test_draws_count_as_half_wins(self):
        m = harness.WinMatrix.zeros(["a", "b"])
        m.first_wins[0, 1] = 50           # a wins 50
        m.first_draws[0, 1] = 50
        m.first_draws[1, 0] = 100         # plus 150 draws
        fit = harness.fit_bayes_elo(m)
        # effective score 125/200 = 0.625
        assert fit.ratings[1] == pytest.approx(-harness.elo_difference(0.625),
                                               abs=1e-6)

    def test_duplicating_games_keeps_ratings_shrinks_intervals(self):
        base = decisive_matrix(["a", "b", "c"],
                               {(0, 1): 60, (1, 0): 40, (1, 2): 70, (2, 1): 30,
                                (0, 2): 80, (2, 0): 20})
        big = decisive_matrix(base.labels,
                              {k: 10 * v for k, v in
                               {(0, 1): 60, (1, 0): 40, (1, 2): 70, (2, 1): 30,
                                (0, 2): 80, (2, 0): 20}.items()})
        f1, f2 = harness.fit_bayes_elo(base), harness.fit_bayes_elo(big)
        np.testing.assert_allclose(f1.ratings, f2.ratings, atol=1e-6)
        assert np.all(f2.half_widths < f1.half_widths)
        np.testing.assert_allclose(f2.half_widths, f1.half_widths / math.sqrt(10),
                                   rtol=1e-9)

    def test_disconnected_graph_names_components(self):
        m = decisive_matrix(["a", "b", "c", "d"], {(0, 1): 5, (1, 0): 5,
                                                   (2, 3): 5, (3, 2): 5})
        with pytest.raises(EstimationError, match="disconnected"):
            harness.fit_bayes_elo(m)
        with pytest.raises(EstimationError, match=r"\['a', 'b'\]"):
            harness.fit_bayes_elo(m)

    def test_all_draws_degenerate(self):
        m = harness.WinMatrix.zeros(["a", "b"])
        m.first_draws[0, 1] = 10
        m.first_draws[1, 0] = 10
        with pytest.warns(UserWarning, match="all games drawn"):
            fit = harness.fit_bayes_elo(m)
        np.testing.assert_array_equal(fit.ratings, [0.0, 0.0])
        assert np.all(np.isinf(fit.half_widths))

    def test_transitive_chain_recovers_ordering(self):
        m = decisive_matrix(["weak", "mid", "strong"],
                            {(1, 0): 70, (0, 1): 30, (2, 1): 70, (1, 2): 30,
                             (2, 0): 85, (0, 2): 15})
        fit = harness.fit_bayes_elo(m)
        assert fit.ratings[0] < fit.ratings[1] < fit.ratings[2]


class TestEloDifference:
    def test_hand_values(self):
        assert harness.elo_difference(0.5) == 0.0
        assert harness.elo_difference(0.76) == pytest.approx(200.24, abs=0.01)
        assert harness.elo_difference(0.25) == \
            pytest.approx(-harness.elo_difference(0.75), rel=1e-12)

    def test_domain(self):
        with pytest.raises(ValidationError):
            harness.elo_difference(0.0)
        with pytest.raises(ValidationError):
            harness.elo_difference(1.0)


class TestOpeningBook:
    def test_vacuous_window_returns_requested_count(self, tictactoe):
        values = oracle.value_iteration(tictactoe).v
        book = harness.generate_opening_book(tictactoe, values, 2,
                                             (-1.0, 1.0), 10, seed=4)
        assert len(book) == 10
        assert len(set(book)) == 10
        again = harness.generate_opening_book(tictactoe, values, 2,
                                              (-1.0, 1.0), 10, seed=4)
        assert book == again

    def test_states_are_exactly_two_plies_deep(self, tictactoe):
        values = oracle.value_iteration(tictactoe).v
        book = harness.generate_opening_book(tictactoe, values, 2,
                                             (-1.0, 1.0), 5, seed=4)
        for state in book:
            cells = tictactoe.decode(state)
            assert sum(1 for c in cells if c != 0) == 2

    def test_window_filters_on_oracle_value(self, tictactoe):
        values = oracle.value_iteration(tictactoe).v
        book = harness.generate_opening_book(tictactoe, values, 2,
                                             (-0.001, 0.001), 20, seed=4)
        assert all(abs(values[s]) <= 0.001 for s in book)

    def test_partial_book_warns(self, tictactoe):
        values = oracle.value_iteration(tictactoe).v
        with pytest.warns(UserWarning, match="partial"):
            book = harness.generate_opening_book(tictactoe, values, 1,
                                                 (-1.0, 1.0), 50, seed=4)
        assert 0 < len(book) <= 9

    def test_single_agent_env_rejected(self, cliff):
        with pytest.raises(ValidationError):
            harness.generate_opening_book(cliff, np.zeros(12), 2, (-1, 1), 4, 0)


class TestTournament:
    def spec(self, **kw):
        defaults = dict(episodes=1, seed=3)
        defaults.update(kw)
        return harness.ExperimentSpec(
            TTT_ENV,
            [agent("fast", simulations=4, particles=1, seed=0),
             agent("slow", simulations=8, particles=1, seed=0)],
            **defaults)

    def test_play_game_reports_first_seat_win(self, tictactoe):
        ev = evaluators.ExactEvaluator(tictactoe, oracle.uniform_policy(tictactoe))
        # X to move and can win at once; any reasonable search finds it
        opening = tictactoe.encode([1, 1, 0, 2, 2, 0, 0, 0, 0])
        out = harness.play_game(tictactoe, ev, SearchConfig(simulations=24),
                                SearchConfig(simulations=24), opening, game_seed=1)
        assert out == 1

    def test_game_counting(self, tictactoe):
        values = oracle.value_iteration(tictactoe).v
        openings = harness.generate_opening_book(tictactoe, values, 2,
                                                 (-1.0, 1.0), 5, seed=3)
        matrix = harness.run_tournament(self.spec(), openings=openings)
        assert matrix.games(0, 1) == 10               # both seatings x 5 openings
        total = (matrix.first_wins.sum() + matrix.first_draws.sum()
                 + matrix.first_losses.sum())
        assert total == 10

    def test_tournament_deterministic(self, tictactoe):
        values = oracle.value_iteration(tictactoe).v
        openings = harness.generate_opening_book(tictactoe, values, 2,
                                                 (-1.0, 1.0), 3, seed=3)
        a = harness.run_tournament(self.spec(), openings=openings)
        b = harness.run_tournament(self.spec(), openings=openings)
        np.testing.assert_array_equal(a.first_wins, b.first_wins)
        np.testing.assert_array_equal(a.first_draws, b.first_draws)

    def test_single_agent_env_rejected(self):
        spec = harness.ExperimentSpec(
            CLIFF_ENV, [agent("a"), agent("b", seed=1)])
        with pytest.raises(ValidationError):
            harness.run_tournament(spec, openings=[0])
