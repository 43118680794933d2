"""Walkthrough: scoring a sampler against an enumerated answer set.

Three numbers summarize a run of N proposals: the share consistent with the
observations (validity), the share distinct from everything before them
(uniqueness), and the fraction of the full admissible set recovered. A
sampler that keeps repeating one correct answer stays at perfect validity
while recovery exposes the collapse.
"""

from hyposet.harness import SamplerConfig, make_sampler, run_instance, run_suite
from hyposet.metrics import aggregate
from hyposet.tasks import get_task

task = get_task("voxel")
instance = task.generate(seed=3, level="2")  # two occupied columns, K=3: 9 scenes
size = task.admissible_count(instance)
print(f"instance {instance.instance_id}: |admissible| = {size}")

# --- the reference sampler hits the ceiling --------------------------------------

oracle_config = SamplerConfig(kind="oracle")
log = run_instance(
    task, instance, make_sampler(oracle_config, task, instance), oracle_config
)
s = log.summary
print(f"oracle: VR={s.vr:.2f} NR={s.nr:.2f} RR={s.rr:.2f}")
print("  recovery curve:", [round(v, 2) for v in s.rr_at_k])

# --- a mode-collapsed sampler ------------------------------------------------------

# repeat the first admissible scene forever: always valid, almost never new
repeat = next(iter(task.admissible_texts(instance)))
repeater_config = SamplerConfig(kind="scripted", script=(repeat,))
log = run_instance(
    task, instance, make_sampler(repeater_config, task, instance),
    repeater_config, n_override=size,
)
s = log.summary
print(f"repeater: VR={s.vr:.2f} NR={s.nr:.2f} RR={s.rr:.2f}")
print("  recovery curve:", [round(v, 2) for v in s.rr_at_k])
print("  failure counts:", {k: v for k, v in s.failure_counts.items() if v})

# --- random draws from the admissible set -------------------------------------------

# valid by construction, but duplicates creep in well before full coverage
random_config = SamplerConfig(kind="random_valid", seed=5)
log = run_instance(
    task, instance, make_sampler(random_config, task, instance), random_config
)
s = log.summary
print(f"random-valid: VR={s.vr:.2f} NR={s.nr:.2f} RR={s.rr:.2f}")

# --- suites and aggregation -----------------------------------------------------------

logs = run_suite("causal", ["1", "2"], 3, oracle_config, seed=11)
rows = [
    {
        "task": log.task,
        "difficulty": log.difficulty,
        "vr": log.summary.vr,
        "nr": log.summary.nr,
        "rr": log.summary.rr,
    }
    for log in logs
]
print("\noracle suite over two difficulty levels, three instances each:")
for row in aggregate(rows):
    print(f"  {row.task:7s} {row.difficulty:9s} {row.metric.upper()}: {row.formatted}")
