from models.channel import ChannelSpec, InputPair
from models.key_protocol import ProtocolTrace, SlotConfig, run, trial_seeds
import logging
import time
from multiprocessing import Pool, cpu_count, current_process
import os
from typing import List, Optional

logger = logging.getLogger(__name__)


# Runs protocol trials, each with its own derived seed, optionally in parallel
def _run_single_trial_for_batch(args):
    """
    Worker function for multiprocessing. Runs one protocol trial.
    'args' is a tuple: (trial_id, spec, inputs, config)
    """
    trial_id, spec, inputs, config = args
    process_name = current_process().name
    pid = os.getpid()

    logger.debug("[%s - PID:%d] starting trial %d", process_name, pid, trial_id)
    trace = run(spec, inputs, config)
    logger.debug("[%s - PID:%d] finished trial %d", process_name, pid, trial_id)
    return trial_id, trace


def run_trials(
    spec: ChannelSpec,
    inputs: InputPair,
    config: SlotConfig,
    trials: int,
    processes: Optional[int] = None
) -> List[ProtocolTrace]:
    """
    Run `trials` independent executions of the scheme.

    Trial t uses the t-th seed spawned from config.seed, so results do not
    depend on the number of worker processes.

    Args:
        spec: channel to simulate.
        inputs: codebook input laws.
        config: planned slot layout; its seed is the root seed.
        trials: number of independent runs.
        processes: worker count; None uses all but one CPU, 1 runs inline.

    Returns:
        Traces ordered by trial id.
    """
    seeds = trial_seeds(config.seed, trials)
    tasks = [(trial_id, spec, inputs, config.with_seed(seed))
             for trial_id, seed in enumerate(seeds, start=1)]

    if processes is None:
        processes = max(1, cpu_count() - 1)
    processes = max(1, min(processes, trials))

    logger.info("starting %d trials over %d slots using %d processes",
                trials, config.num_slots, processes)
    start_time = time.time()

    if processes == 1:
        results = [_run_single_trial_for_batch(task) for task in tasks]
    else:
        with Pool(processes=processes) as pool:
            results = pool.map(_run_single_trial_for_batch, tasks)

    logger.info("all trials completed in %.2f seconds", time.time() - start_time)
    return [trace for _, trace in sorted(results, key=lambda item: item[0])]
