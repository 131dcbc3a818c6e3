import asyncio
import json
import logging

from a2a.server.tasks import TaskUpdater
from a2a.types import DataPart, Part, TaskState, TextPart
from a2a.utils import new_agent_text_message

from walls.errors import InputError

from .runner import OutputFormat, RunConfig, dispatch, sweep_points

logger = logging.getLogger(__name__)


def parse_request(text: str) -> RunConfig:
    """A JSON object holding one RunConfig."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"request is not JSON: {e}", operation="run") from e
    if not isinstance(data, dict):
        raise InputError("request must be a JSON object", operation="run")
    return RunConfig.model_validate(data)


class Agent:
    """Answers one RunConfig with the same table the CLI would print."""

    def __init__(self, workers: int = 1):
        self.workers = workers

    async def run(self, config: RunConfig, updater: TaskUpdater) -> None:
        points = len(sweep_points(config))
        await updater.update_status(
            TaskState.working,
            new_agent_text_message(f"Running {config.command.value} over {points} point(s)"),
        )

        # blocking numerics run off the event loop
        table = await asyncio.to_thread(dispatch, config, workers=self.workers)

        csv_config = config.model_copy(update={"format": OutputFormat.CSV})
        await updater.add_artifact(
            parts=[
                Part(root=TextPart(text=table.model_copy(update={"config": csv_config}).to_csv())),
                Part(root=DataPart(data={"config": config.model_dump(mode="json"), "records": table.records()})),
            ],
            name=f"wall-lab {config.command.value}",
        )
        logger.info("%s: %d row(s) returned", config.command.value, len(table.rows))
