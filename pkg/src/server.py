import argparse
import logging

import uvicorn

from a2a.server.apps import A2AStarletteApplication
from a2a.server.request_handlers import DefaultRequestHandler
from a2a.server.tasks import InMemoryTaskStore
from a2a.types import (
    AgentCapabilities,
    AgentCard,
    AgentSkill,
)

from .executor import Executor

EXAMPLE_REQUEST = '{"command": "delay", "params": {"L": ["-1", "1"], "k0": 1.0}}'


def build_agent_card(url: str) -> AgentCard:
    skill = AgentSkill(
        id="wall_lab",
        name="Wall Lab",
        description=(
            "Evaluates quantum walls on the half line: phase shifts and time delays, packet measurements, "
            "propagators, regularization sweeps, classical counterparts and WKB path analysis. "
            "Send a run configuration as JSON; the answer is a CSV table plus its records."
        ),
        tags=["physics", "quantum", "numerics"],
        examples=[EXAMPLE_REQUEST],
    )
    return AgentCard(
        name="Wall Lab",
        description="Numerical laboratory for self-adjoint point interactions at the edge of the half line.",
        url=url,
        version='0.1.0',
        default_input_modes=['text'],
        default_output_modes=['text', 'data'],
        capabilities=AgentCapabilities(streaming=True),
        skills=[skill]
    )


def main():
    parser = argparse.ArgumentParser(description="Run the wall-lab A2A agent.")
    parser.add_argument("--host", type=str, default="127.0.0.1", help="Host to bind the server.")
    parser.add_argument("--port", type=int, default=9009, help="Port to bind the server.")
    parser.add_argument("--card-url", type=str, help="URL to advertise in the agent card.")
    parser.add_argument("--workers", type=int, default=1, help="Threads per request for sweep points.")
    args = parser.parse_args()

    logging.basicConfig(level=logging.INFO, format="[%(module)-12s] %(message)s")

    request_handler = DefaultRequestHandler(
        agent_executor=Executor(workers=max(args.workers, 1)),
        task_store=InMemoryTaskStore(),
    )
    server = A2AStarletteApplication(
        agent_card=build_agent_card(args.card_url or f"http://{args.host}:{args.port}/"),
        http_handler=request_handler,
    )
    uvicorn.run(server.build(), host=args.host, port=args.port)


if __name__ == '__main__':
    main()
