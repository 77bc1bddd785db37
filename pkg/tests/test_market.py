"""Market-core tests: LMSR pricing oracles and ledger/state invariants.

Numeric oracles are computed independently here with ``math`` calls written
out long-hand, never by calling the functions under test, so a regression
in the implementation cannot hide inside the expectation.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from replimarket import (
    AlreadyClosedError,
    AssetSide,
    Direction,
    Ledger,
    MarketClosedError,
    MarketState,
    MarketStatus,
    Outcome,
    SettleBeforeCloseError,
    TraderKind,
    close_market,
    cost,
    execute_order,
    price,
    quote_trade,
    settle,
    step_iteration,
)
from replimarket.market import Order, RejectReason, TradeRecord

YES = AssetSide.WILL_REPLICATE
NO = AssetSide.WILL_NOT_REPLICATE


def make_market(b=10.0, max_iterations=100, qty_yes=0.0, qty_no=0.0):
    state = MarketState("m-test", b=b, max_iterations=max_iterations)
    state.q_yes = qty_yes
    state.q_no = qty_no
    return state


def funded_ledger(*traders: tuple[str, float]) -> Ledger:
    ledger = Ledger()
    for trader_id, cash in traders:
        ledger.open_account(trader_id, cash)
    return ledger


def buy(trader_id: str, side: AssetSide, sequence: int = 0) -> Order:
    return Order(trader_id, TraderKind.HUMAN, side, Direction.BUY, sequence)


def sell(trader_id: str, side: AssetSide, sequence: int = 0) -> Order:
    return Order(trader_id, TraderKind.HUMAN, side, Direction.SELL, sequence)


# -- price ------------------------------------------------------------------


class TestPrice:
    def test_symmetric_origin_is_half(self):
        state = make_market()
        assert price(state, YES) == 0.5
        assert price(state, NO) == 0.5

    def test_ten_share_lead_matches_logistic_oracle(self):
        # qYes=10, qNo=0, b=10: priceYes = e^1 / (e^1 + 1), evaluated
        # independently of the implementation's softmax arrangement.
        state = make_market(qty_yes=10.0)
        expected = math.exp(1.0) / (math.exp(1.0) + 1.0)
        assert price(state, YES) == pytest.approx(expected, abs=1e-15)
        assert price(state, YES) == pytest.approx(0.731059, abs=5e-7)

    def test_translation_invariance(self):
        # Adding k shares to both sides never moves the price.
        base = make_market(qty_yes=3.0, qty_no=1.0)
        shifted = make_market(qty_yes=3.0 + 57.0, qty_no=1.0 + 57.0)
        assert price(shifted, YES) == pytest.approx(price(base, YES), abs=1e-12)

    @given(
        qty_yes=st.floats(-500, 500),
        qty_no=st.floats(-500, 500),
        b=st.floats(0.5, 100),
    )
    def test_prices_sum_to_one(self, qty_yes, qty_no, b):
        state = make_market(b=b, qty_yes=qty_yes, qty_no=qty_no)
        assert price(state, YES) + price(state, NO) == pytest.approx(1.0, abs=1e-12)
        if abs(qty_yes - qty_no) <= 30.0 * b:
            # Strictly interior whenever the softmax hasn't saturated
            # float64 (the losing side's weight stays above one ulp of 1).
            assert 0.0 < price(state, YES) < 1.0

    def test_extreme_quantities_do_not_overflow(self):
        # |q|/b = 700: a naive exp(700) would overflow to inf.  The
        # stabilized forms stay finite; the complement saturates to 0.
        state = make_market(b=10.0, qty_yes=7000.0, qty_no=0.0)
        assert price(state, YES) == pytest.approx(1.0, abs=1e-12)
        assert price(state, NO) == pytest.approx(0.0, abs=1e-12)
        assert cost(state) == pytest.approx(7000.0, rel=1e-12)
        assert math.isfinite(cost(state))


# -- cost -------------------------------------------------------------------


class TestCost:
    def test_origin_cost_is_b_ln_two(self):
        assert cost(make_market()) == pytest.approx(10.0 * math.log(2.0), abs=1e-15)

    def test_one_share_cost_matches_oracle(self):
        # qYes=1, qNo=0, b=10: C = 10 * ln(e^0.1 + 1), written out long-hand.
        expected = 10.0 * math.log(math.exp(0.1) + 1.0)
        assert cost(make_market(qty_yes=1.0)) == pytest.approx(expected, abs=1e-15)

    @given(k=st.floats(-200, 200), b=st.floats(0.5, 50))
    def test_equal_quantities_shift_cost_linearly(self, k, b):
        # C(k, k) = k + b*ln 2 by the log-sum-exp translation identity.
        state = make_market(b=b, qty_yes=k, qty_no=k)
        assert cost(state) == pytest.approx(k + b * math.log(2.0), rel=1e-12, abs=1e-9)

    @given(qty_yes=st.floats(-50, 50), qty_no=st.floats(-50, 50))
    def test_cost_strictly_increases_in_quantity(self, qty_yes, qty_no):
        state = make_market(qty_yes=qty_yes, qty_no=qty_no)
        bumped = make_market(qty_yes=qty_yes + 1.0, qty_no=qty_no)
        assert cost(bumped) > cost(state)


# -- quotes -----------------------------------------------------------------


class TestQuoteTrade:
    def test_first_buy_from_origin_matches_oracle(self):
        # Trader pays 10*ln((e^0.1 + 1)/2); the quote is the signed cash
        # delta, so it comes back negative.
        state = make_market()
        expected_cost = 10.0 * math.log((math.exp(0.1) + 1.0) / 2.0)
        quote = quote_trade(state, YES, Direction.BUY)
        assert quote == pytest.approx(-expected_cost, abs=1e-15)
        assert quote == pytest.approx(-0.512495, abs=5e-7)

    def test_sell_is_negated_buy_from_the_far_state(self):
        state = make_market(qty_yes=1.0)
        expected = 10.0 * math.log((math.exp(0.1) + 1.0) / 2.0)
        assert quote_trade(state, YES, Direction.SELL) == pytest.approx(expected, abs=1e-15)

    @given(
        qty_yes=st.floats(-30, 30),
        qty_no=st.floats(-30, 30),
        b=st.floats(2.0, 50.0),
        side=st.sampled_from([AssetSide.WILL_REPLICATE, AssetSide.WILL_NOT_REPLICATE]),
    )
    def test_buy_quotes_are_negative_unit_bounded(self, qty_yes, qty_no, b, side):
        # Quantity gap capped at 30*b: states reachable through funded
        # single-share trading, where float arithmetic keeps the strict
        # bounds (past ~37*b the one-share cost difference underflows).
        state = make_market(b=b, qty_yes=qty_yes, qty_no=qty_no)
        quote = quote_trade(state, side, Direction.BUY)
        assert -1.0 < quote < 0.0

    def test_quote_leaves_state_untouched(self):
        state = make_market(qty_yes=2.0, qty_no=5.0)
        before = (state.q_yes, state.q_no, state.iteration)
        quote_trade(state, YES, Direction.BUY)
        assert (state.q_yes, state.q_no, state.iteration) == before

    def test_quote_on_closed_market_rejected(self):
        state = make_market()
        close_market(state)
        with pytest.raises(MarketClosedError):
            quote_trade(state, YES, Direction.BUY)

    def test_sell_quote_requires_outstanding_shares(self):
        with pytest.raises(ValueError):
            quote_trade(make_market(), YES, Direction.SELL)


# -- executeOrder -----------------------------------------------------------


class TestExecuteOrder:
    def test_funded_buy_updates_cash_and_holdings(self):
        state = make_market()
        ledger = funded_ledger(("t1", 25.0))
        record = execute_order(state, ledger, buy("t1", YES))
        paid = 10.0 * math.log((math.exp(0.1) + 1.0) / 2.0)
        assert record.accepted
        assert ledger.accounts["t1"].cash == pytest.approx(25.0 - paid, abs=1e-12)
        assert ledger.accounts["t1"].holdings[YES] == 1
        assert ledger.market_maker_collected == pytest.approx(paid, abs=1e-12)

    def test_insufficient_cash_rejected_without_side_effects(self):
        state = make_market()
        ledger = funded_ledger(("broke", 0.0))
        snapshot = (state.q_yes, state.q_no, ledger.accounts["broke"].cash)
        record = execute_order(state, ledger, buy("broke", YES))
        assert not record.accepted
        assert record.reject_reason is RejectReason.INSUFFICIENT_CASH
        assert (state.q_yes, state.q_no, ledger.accounts["broke"].cash) == snapshot

    def test_sell_without_holdings_rejected(self):
        state = make_market(qty_yes=4.0)
        ledger = funded_ledger(("t1", 25.0))
        record = execute_order(state, ledger, sell("t1", NO))
        assert not record.accepted
        assert record.reject_reason is RejectReason.INSUFFICIENT_HOLDINGS

    def test_order_on_closed_market_rejected_not_raised(self):
        state = make_market()
        ledger = funded_ledger(("t1", 25.0))
        close_market(state)
        record = execute_order(state, ledger, buy("t1", YES))
        assert not record.accepted
        assert record.reject_reason is RejectReason.MARKET_CLOSED

    def test_buy_then_sell_nets_to_zero(self):
        state = make_market(qty_yes=3.0, qty_no=7.0)
        ledger = funded_ledger(("t1", 25.0))
        first = execute_order(state, ledger, buy("t1", YES))
        second = execute_order(state, ledger, sell("t1", YES))
        assert first.accepted and second.accepted
        assert first.cash_delta + second.cash_delta == pytest.approx(0.0, abs=1e-12)
        assert ledger.accounts["t1"].cash == pytest.approx(25.0, abs=1e-12)


# -- stepIteration ----------------------------------------------------------


class TestStepIteration:
    def test_noop_step_advances_iteration_only(self):
        state = make_market()
        ledger = Ledger()
        records = step_iteration(state, ledger, [], [])
        assert records == []
        assert state.iteration == 1
        assert price(state, YES) == 0.5

    def test_agents_execute_before_humans(self):
        state = make_market()
        ledger = funded_ledger(("agent", 25.0), ("human", 25.0))
        agent_order = Order("agent", TraderKind.AGENT, YES, Direction.BUY)
        human_order = Order("human", TraderKind.HUMAN, YES, Direction.BUY, sequence=0)
        records = step_iteration(state, ledger, [agent_order], [human_order])
        assert [r.order.kind for r in records] == [TraderKind.AGENT, TraderKind.HUMAN]
        # The human bought at the moved price, so paid strictly more.
        assert -records[1].cash_delta > -records[0].cash_delta

    def test_human_queue_respects_sequence_order(self):
        state = make_market()
        ledger = funded_ledger(("early", 25.0), ("late", 25.0))
        queue = [
            Order("late", TraderKind.HUMAN, YES, Direction.BUY, sequence=7),
            Order("early", TraderKind.HUMAN, YES, Direction.BUY, sequence=3),
        ]
        records = step_iteration(state, ledger, [], queue)
        assert [r.order.trader_id for r in records] == ["early", "late"]
        assert [r.order.sequence for r in records] == [3, 7]

    def test_step_past_max_iterations_raises(self):
        state = make_market(max_iterations=1)
        ledger = Ledger()
        step_iteration(state, ledger, [], [])
        with pytest.raises(MarketClosedError):
            step_iteration(state, ledger, [], [])

    def test_rejected_human_orders_still_drain(self):
        state = make_market()
        ledger = funded_ledger(("broke", 0.0), ("t2", 25.0))
        queue = [
            Order("broke", TraderKind.HUMAN, YES, Direction.BUY, sequence=0),
            Order("t2", TraderKind.HUMAN, YES, Direction.BUY, sequence=1),
        ]
        records = step_iteration(state, ledger, [], queue)
        assert [r.accepted for r in records] == [False, True]


# -- close & settle ---------------------------------------------------------


class TestCloseAndSettle:
    def test_close_records_final_price(self):
        state = make_market(qty_yes=10.0)
        close_market(state)
        assert state.status is MarketStatus.CLOSED
        assert state.final_price_yes == pytest.approx(
            math.exp(1.0) / (math.exp(1.0) + 1.0), abs=1e-15
        )

    def test_no_trade_market_closes_at_exactly_half(self):
        state = make_market()
        ledger = Ledger()
        for _ in range(state.max_iterations):
            step_iteration(state, ledger, [], [])
        close_market(state)
        assert state.final_price_yes == 0.5

    def test_double_close_raises(self):
        state = make_market()
        close_market(state)
        with pytest.raises(AlreadyClosedError):
            close_market(state)

    def test_settle_before_close_raises(self):
        state = make_market()
        with pytest.raises(SettleBeforeCloseError):
            settle(state, Ledger(), Outcome.REPLICATED)

    def test_settle_pays_winning_side_only(self):
        state = make_market()
        ledger = funded_ledger(("t1", 21.40))
        ledger.accounts["t1"].holdings[YES] = 3
        close_market(state)
        payouts = settle(state, ledger, Outcome.REPLICATED)
        assert payouts["t1"] == pytest.approx(24.40, abs=1e-12)
        assert state.status is MarketStatus.SETTLED

    def test_settle_losing_side_pays_cash_only(self):
        state = make_market()
        ledger = funded_ledger(("t1", 21.40))
        ledger.accounts["t1"].holdings[YES] = 3
        close_market(state)
        payouts = settle(state, ledger, Outcome.NOT_REPLICATED)
        assert payouts["t1"] == pytest.approx(21.40, abs=1e-12)


# -- randomized ledger audits -------------------------------------------------


def random_trade_sequence(seed: int, n_traders: int = 4, n_orders: int = 60):
    """One reproducible session: random single-share orders, then settle."""
    rng = np.random.default_rng(seed)
    state = make_market(b=float(rng.uniform(2.0, 20.0)), max_iterations=10_000)
    traders = [f"t{i}" for i in range(n_traders)]
    ledger = funded_ledger(*((t, 25.0) for t in traders))
    records = []
    for _ in range(n_orders):
        trader = traders[int(rng.integers(n_traders))]
        side = YES if rng.random() < 0.5 else NO
        direction = Direction.BUY if rng.random() < 0.7 else Direction.SELL
        order = Order(trader, TraderKind.HUMAN, side, direction)
        records.append(execute_order(state, ledger, order))
    return state, ledger, records


class TestLedgerInvariants:
    @pytest.mark.parametrize("seed", range(25))
    def test_cash_is_conserved_pre_settlement(self, seed):
        state, ledger, _ = random_trade_sequence(seed)
        total = ledger.total_cash() + ledger.market_maker_collected
        assert total == pytest.approx(4 * 25.0, abs=1e-9)

    @pytest.mark.parametrize("seed", range(25))
    def test_market_maker_loss_is_bounded(self, seed):
        state, ledger, _ = random_trade_sequence(seed)
        bound = state.b * math.log(2.0)
        for outcome in (Outcome.REPLICATED, Outcome.NOT_REPLICATED):
            liability = sum(
                acct.holdings[outcome.winning_side] for acct in ledger.accounts.values()
            )
            assert ledger.market_maker_collected - liability >= -bound - 1e-9

    @pytest.mark.parametrize("seed", range(10))
    def test_settlement_conserves_value(self, seed):
        state, ledger, _ = random_trade_sequence(seed)
        close_market(state)
        payouts = settle(state, ledger, Outcome.REPLICATED)
        # Every dollar paid out came from endowments minus what the
        # market maker kept, plus the maker's own liability payment.
        winning = sum(
            acct.holdings[Outcome.REPLICATED.winning_side]
            for acct in ledger.accounts.values()
        )
        assert sum(payouts.values()) == pytest.approx(
            4 * 25.0 - ledger.market_maker_collected + winning, abs=1e-9
        )

    def test_path_independence_of_maker_revenue(self):
        # Two different orders of the same multiset of trades end at the
        # same quantities, so the maker collected the same total.
        orders = [buy("t1", YES), buy("t1", NO), buy("t1", YES), buy("t1", NO)]
        totals = []
        for sequence in (orders, orders[::-1]):
            state = make_market()
            ledger = funded_ledger(("t1", 25.0))
            for order in sequence:
                assert execute_order(state, ledger, order).accepted
            totals.append(ledger.market_maker_collected)
        assert totals[0] == pytest.approx(totals[1], abs=1e-9)

    @pytest.mark.parametrize("seed", range(10))
    def test_rejection_purity_bit_identical(self, seed):
        state, ledger, _ = random_trade_sequence(seed, n_orders=20)
        snapshot = (
            state.q_yes,
            state.q_no,
            ledger.market_maker_collected,
            {t: (a.cash, dict(a.holdings)) for t, a in ledger.accounts.items()},
        )
        ledger.open_account("broke", 0.0)
        record = execute_order(state, ledger, buy("broke", YES))
        assert not record.accepted
        after = (
            state.q_yes,
            state.q_no,
            ledger.market_maker_collected,
            {t: (a.cash, dict(a.holdings)) for t, a in ledger.accounts.items() if t != "broke"},
        )
        assert snapshot == after  # bit-identical, no tolerance


# -- trade records ------------------------------------------------------------


class TestTradeRecord:
    def test_csv_round_trip_is_bit_exact(self):
        state = make_market()
        ledger = funded_ledger(("t1", 25.0))
        record = execute_order(state, ledger, buy("t1", YES))
        row = record.to_csv_row()
        fields = row.split(",")
        assert fields[0] == "t1"
        assert float(fields[6]) == record.price_yes_after
        assert float(fields[7]) == record.cash_delta

    def test_header_matches_field_order(self):
        assert TradeRecord.CSV_HEADER.split(",")[0] == "traderId"
        assert TradeRecord.CSV_HEADER.split(",")[-1] == "rejectReason"
