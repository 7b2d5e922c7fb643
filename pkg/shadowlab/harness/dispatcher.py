"""Dispatcher routing scenarios to experiment runners and collecting their records."""

import logging
from typing import Any, Dict, List, Optional

from shadowlab.errors import ScenarioError
from shadowlab.harness.ledger import LedgerRecord, ResultLedger
from shadowlab.harness.runners import BaseExperimentRunner, default_runners
from shadowlab.harness.scenario import Scenario

logger = logging.getLogger(__name__)


class ExperimentDispatcher:
    """Routes each scenario to the runner that handles its kind and appends the records to one ledger."""

    def __init__(self, runners: Optional[List[BaseExperimentRunner]] = None, ledger: Optional[ResultLedger] = None):
        """Initialize the dispatcher."""
        self.runners = runners if runners is not None else default_runners()
        self.ledger = ledger if ledger is not None else ResultLedger()
        self.runner_capabilities: Dict[str, Dict[str, Any]] = {}
        self._register_runner_capabilities()

    def _register_runner_capabilities(self):
        """Register capabilities of all runners."""
        for runner in self.runners:
            self.runner_capabilities[runner.name] = runner.get_capabilities()

    def select_runner(self, scenario: Scenario) -> BaseExperimentRunner:
        """Select the runner whose capabilities cover the scenario's kind."""
        for runner in self.runners:
            if scenario.kind.value in self.runner_capabilities[runner.name]["can_handle"]:
                return runner
        raise ScenarioError(f"No runner handles {scenario.kind.value} scenarios")

    def dispatch(self, scenario: Scenario, workers: int = 1) -> List[LedgerRecord]:
        """Run one scenario and append its records to the ledger."""
        runner = self.select_runner(scenario)
        logger.info(f"Routing {scenario.scenario_id} ({scenario.kind.value}) to {runner.name}")
        records = runner.handle_request(scenario, workers)
        self.ledger.extend(records)
        violations = [r for r in records if not r.passed]
        if violations:
            logger.warning(f"{scenario.scenario_id}: {len(violations)} of {len(records)} records violate their bound")
        return records

    def summarize(self) -> List[List[Any]]:
        """Rows (scenario, quantity, t_or_r, value, error, margin, pass) for a summary table."""
        return [
            [r.scenario_id, r.quantity, r.t_or_r, r.value, r.error, r.margin, "pass" if r.passed else "FAIL"]
            for r in self.ledger
        ]


def run_scenario(
    config: Scenario,
    workers: int = 1,
    dispatcher: Optional[ExperimentDispatcher] = None,
) -> List[LedgerRecord]:
    """Run a validated scenario through the matching pipeline.

    Args:
        config: Schema-valid scenario
        workers: Worker threads; results do not depend on it
        dispatcher: Dispatcher holding the ledger to append to

    Returns:
        List[LedgerRecord]: The records of this run
    """
    dispatcher = dispatcher if dispatcher is not None else ExperimentDispatcher()
    return dispatcher.dispatch(config, workers)
