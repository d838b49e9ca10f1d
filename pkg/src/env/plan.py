import logging
from pathlib import Path
from typing import Iterable, Optional, Sequence

from env.mdp import Action, DronePhase, MdpState, Mode, StepResult, TspdEnv
from errors import ContractViolationError, IllegalActionError, InstanceFormatError
from schemas.models import DEPOT, Instance, Plan, Sortie

logger = logging.getLogger(__name__)


class PlanRecorder:
    """Builds a Plan from the transitions of one episode."""

    def __init__(self, mode: Mode | str = Mode.NO_REVISIT):
        self.mode = Mode(mode)
        self.actions: list[tuple[int, int]] = []
        self.costs: list[float] = []
        self.truck_route: list[int] = [DEPOT]
        self.sorties: list[Sortie] = []
        self._launch: Optional[tuple[int, int]] = None
        self._elapsed = 0.0
        self._truncated = False

    def record(self, before: MdpState, action: Action, result: StepResult) -> None:
        after = result.state
        self.actions.append((action.truck, action.drone))
        self.costs.append(result.cost)
        self._elapsed = after.elapsed
        self._truncated = after.truncated
        if after.rem_truck == 0.0 and after.dest_truck != self.truck_route[-1]:
            self.truck_route.append(after.dest_truck)
        if before.drone_phase is DronePhase.MOUNTED and after.drone_phase is DronePhase.TO_CUSTOMER:
            self._launch = (before.dest_drone, action.drone)
        elif before.drone_phase is not DronePhase.MOUNTED and after.drone_phase is DronePhase.MOUNTED:
            if self._launch is None:
                raise ContractViolationError("drone remounted without a recorded launch")
            launch, customer = self._launch
            self.sorties.append(Sortie(launch=launch, customer=customer, rendezvous=after.dest_truck))
            self._launch = None

    def finish(self) -> Plan:
        route = list(self.truck_route)
        if len(route) == 1 and not self._truncated:
            # the truck never left the depot
            route.append(DEPOT)
        return Plan(
            actions=list(self.actions),
            costs=list(self.costs),
            truck_route=route,
            sorties=list(self.sorties),
            makespan=self._elapsed,
            mode=self.mode.value,
            truncated=self._truncated,
        )


def replay(inst: Instance, actions: Iterable[Sequence[int]], mode: Mode | str = Mode.NO_REVISIT) -> Plan:
    """Re-executes an action sequence from reset; the result must be a completed episode."""
    env = TspdEnv(inst, mode)
    state, _ = env.reset()
    recorder = PlanRecorder(env.mode)
    terminal = False
    for k, (a_tr, a_dr) in enumerate(actions):
        if terminal:
            raise IllegalActionError("the episode already terminated", step=k)
        rule = env.violation(state, int(a_tr), int(a_dr))
        if rule is not None:
            raise IllegalActionError(rule, step=k)
        action = Action(int(a_tr), int(a_dr))
        result = env.advance(state, action.truck, action.drone)
        recorder.record(state, action, result)
        state, terminal = result.state, result.terminal
    if not terminal:
        raise IllegalActionError("the action sequence ends before the episode terminates", step=len(recorder.actions))
    return recorder.finish()


# Text format, 1-based node labels
def dumps_plan(plan: Plan) -> str:
    lines = [f"makespan {plan.makespan!r}"]
    if plan.mode == Mode.REVISIT.value:
        lines.append("mode revisit")
    if plan.truncated:
        lines.append("truncated")
    lines.append("truck " + " ".join(str(v + 1) for v in plan.truck_route))
    for sortie in plan.sorties:
        lines.append(f"sortie {sortie.launch + 1} {sortie.customer + 1} {sortie.rendezvous + 1}")
    for a_tr, a_dr in plan.actions:
        lines.append(f"action {a_tr + 1} {a_dr + 1}")
    return "\n".join(lines) + "\n"


def save_plan(plan: Plan, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_plan(plan), encoding="utf-8")
    return path


def loads_plan(text: str, source: Optional[str] = None) -> Plan:
    makespan = None
    mode = Mode.NO_REVISIT.value
    truncated = False
    route: list[int] = []
    sorties: list[Sortie] = []
    actions: list[tuple[int, int]] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        keyword, *rest = line.split()
        try:
            if keyword == "makespan" and len(rest) == 1:
                makespan = float(rest[0])
            elif keyword == "mode" and rest == ["revisit"]:
                mode = Mode.REVISIT.value
            elif keyword == "truncated" and not rest:
                truncated = True
            elif keyword == "truck":
                route = [int(tok) - 1 for tok in rest]
            elif keyword == "sortie" and len(rest) == 3:
                launch, customer, rendezvous = (int(tok) - 1 for tok in rest)
                sorties.append(Sortie(launch=launch, customer=customer, rendezvous=rendezvous))
            elif keyword == "action" and len(rest) == 2:
                actions.append((int(rest[0]) - 1, int(rest[1]) - 1))
            else:
                raise InstanceFormatError(f"unrecognized plan line {line!r}", line=number, path=source)
        except ValueError:
            raise InstanceFormatError(f"non-numeric token in {line!r}", line=number, path=source)
    if makespan is None:
        raise InstanceFormatError("plan has no makespan line", line=1, path=source)
    return Plan(
        actions=actions,
        costs=[],
        truck_route=route,
        sorties=sorties,
        makespan=makespan,
        mode=mode,
        truncated=truncated,
    )


def load_plan(path: str | Path) -> Plan:
    path = Path(path)
    return loads_plan(path.read_text(encoding="utf-8"), source=str(path))


def verify_plan(inst: Instance, plan: Plan, tolerance: float = 1e-9) -> Plan:
    """Replays a plan and checks the stated makespan; returns the replayed plan."""
    replayed = replay(inst, plan.actions, plan.mode)
    if abs(replayed.makespan - plan.makespan) > tolerance:
        raise ContractViolationError(
            f"plan states makespan {plan.makespan} but replays to {replayed.makespan}"
        )
    return replayed
