import numpy as np

from dgcc.encoding import Genome, initial_decomposition
from dgcc.instance import GeneratorSpec, generate_instance


def random_valid_genome(plan, instance, rng, p_z=0.3):
    """Assemble a structurally valid genome: per segment, a shuffled subset
    of the cluster's POIs with random zeroing, at least one survivor."""
    slots = []
    for pos in range(1, plan.m + 1):
        members = instance.cluster_members(plan.order[pos - 1])
        length = plan.days[pos - 1] * plan.M
        take = min(length, len(members))
        picked = [int(v) for v in rng.permutation(members)[:take]]
        seg = picked + [0] * (length - take)
        seg = [0 if rng.random() < p_z else v for v in seg]
        if all(v == 0 for v in seg):
            seg[int(rng.integers(0, length))] = picked[0]
        slots.extend(seg)
    return Genome(slots)


def small_problem(m=2, sizes=(6, 6), D=4, M=3, seed=0, margin=1.5):
    instance = generate_instance(GeneratorSpec(m=m, cluster_sizes=tuple(sizes), margin=margin), seed=seed)
    plan = initial_decomposition(m, D, M)
    return instance, plan


def rng_for(seed):
    return np.random.default_rng(seed)
