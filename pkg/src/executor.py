import logging

from a2a.server.agent_execution import AgentExecutor, RequestContext
from a2a.server.events import EventQueue
from a2a.server.tasks import TaskUpdater
from a2a.types import (
    InvalidRequestError,
    TaskState,
    UnsupportedOperationError,
)
from a2a.utils import (
    get_message_text,
    new_agent_text_message,
    new_task,
)
from a2a.utils.errors import ServerError
from pydantic import ValidationError

from walls.errors import InputError, NumericalFailure

from .agent import Agent, parse_request

logger = logging.getLogger(__name__)

TERMINAL_STATES = {
    TaskState.completed,
    TaskState.canceled,
    TaskState.failed,
    TaskState.rejected
}


class Executor(AgentExecutor):
    """One wall-lab run per task.

    Bad configurations and out-of-domain values reject the task, numerical
    self-check failures fail it; the CLI maps the same split to exit codes 2 and 3.
    """

    def __init__(self, workers: int = 1):
        self.agent = Agent(workers=workers)

    async def execute(self, context: RequestContext, event_queue: EventQueue) -> None:
        msg = context.message
        if not msg:
            raise ServerError(error=InvalidRequestError(message="Missing message in request"))

        task = context.current_task
        if task and task.status.state in TERMINAL_STATES:
            raise ServerError(error=InvalidRequestError(message=f"Task {task.id} already processed (state: {task.status.state})"))

        if not task:
            task = new_task(msg)
            await event_queue.enqueue_event(task)

        updater = TaskUpdater(event_queue, task.id, task.context_id)
        await updater.start_work()
        await self.handle(get_message_text(msg), updater)

    async def handle(self, text: str, updater: TaskUpdater) -> None:
        """Run one request and leave the task in a terminal state."""

        def reply(prefix: str, error: Exception):
            return new_agent_text_message(f"{prefix}: {error}", context_id=updater.context_id, task_id=updater.task_id)

        try:
            config = parse_request(text)
            await self.agent.run(config, updater)
        except (ValidationError, InputError) as e:
            logger.info("task %s rejected: %s", updater.task_id, e)
            await updater.reject(reply("Invalid request", e))
        except NumericalFailure as e:
            logger.warning("task %s failed a numerical check: %s", updater.task_id, e)
            await updater.failed(reply("Numerical failure", e))
        except Exception as e:
            logger.exception("task %s failed", updater.task_id)
            await updater.failed(reply("Agent error", e))
        else:
            await updater.complete()

    async def cancel(self, context: RequestContext, event_queue: EventQueue) -> None:
        raise ServerError(error=UnsupportedOperationError())
