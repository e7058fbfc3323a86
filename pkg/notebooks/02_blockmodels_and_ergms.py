# %% [markdown]
# # Block structure and ERGM coefficients by level
#
# Each level's collapsed organization graph is partitioned with the
# degree-corrected block model. Partitions of bootstrap samples are then
# compared with normalized reduced mutual information. Last, ERGMs are fitted
# over the bootstrap ensembles, once at each level's own size and once with
# every level resampled to the size of the organization main graph.

# %%
import warnings

import numpy as np

from stratanet.backbone import extract_backbone
from stratanet.blockmodel import fit_sbm, rmi
from stratanet.bootstrap import ensemble
from stratanet.ergm import CLOSURE, HOMOPHILY, bootstrap_ergm, default_terms
from stratanet.ingest import FilterSpec, build_level_graphs, collapse, filter_events
from stratanet.model import DegenerateAnalysisError, Level, SparsityWarning
from stratanet.synthetic import four_level_fixture

SEED = 0
N_SAMPLES = 30

data = four_level_fixture(SEED)
events = filter_events(data.events, FilterSpec(keywords=tuple(data.keywords)), data.roster)
graphs = build_level_graphs(events, data.roster)
collapsed = {lvl: collapse(extract_backbone(g, 0.1), data.roster) for lvl, g in graphs.items()}

# %% [markdown]
# ## Block models on the observed graphs
# The sparse organization side graph yields a single block, and the fit says
# so with a warning rather than silently.

# %%
for lvl, cg in collapsed.items():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SparsityWarning)
        res = fit_sbm(cg, n_sweeps=300, seed=SEED)
    note = " (sparsity warning)" if caught else ""
    print(f"{lvl.value:9s} B={res.block_count} DL={res.description_length:.1f}{note}")

# %% [markdown]
# ## Agreement between bootstrap partitions
# Values near 1 mean two samples give the same blocks; values near 0 or
# below mean the agreement is no better than chance.

# %%
def sample_partitions(lvl, k=4):
    out = []
    for i, s in enumerate(ensemble(graphs[lvl], None, k, SEED)):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", SparsityWarning)
            out.append(fit_sbm(collapse(extract_backbone(s, 0.1), data.roster), n_sweeps=200, seed=i).partition)
    return out


parts = {lvl: sample_partitions(lvl) for lvl in (Level.OrgMain, Level.IndMain, Level.IndSide)}
for a in parts:
    for b in parts:
        vals = [rmi(p, q).normalized for i, p in enumerate(parts[a]) for j, q in enumerate(parts[b])
                if a != b or i < j]
        print(f"{a.value:9s} vs {b.value:9s} mean RMI {np.mean(vals):+.3f}")

# %% [markdown]
# ## ERGM coefficient distributions
# Sector activity terms control for how active each sector is; homophily
# and closure are the terms of interest.

# %%
terms = default_terms([data.roster.sector(o) for o in data.roster.organizations])
reference_size = graphs[Level.OrgMain].total_weight


def ergm_summary(lvl, m=None):
    samples = [collapse(extract_backbone(s, 0.1), data.roster) for s in ensemble(graphs[lvl], m, N_SAMPLES, SEED)]
    try:
        ens = bootstrap_ergm(samples, terms, data.roster)
    except DegenerateAnalysisError as exc:
        return str(exc)
    cells = []
    for t in (HOMOPHILY, CLOSURE):
        q = np.quantile(ens.distribution(t), [0.025, 0.5, 0.975])
        cells.append(f"{t.name} {q[1]:+.2f} [{q[0]:+.2f}, {q[2]:+.2f}]")
    return f"{len(ens.estimates)}/{N_SAMPLES} usable; " + "; ".join(cells)


for lvl in Level:
    print(f"{lvl.value:9s} own size : {ergm_summary(lvl)}")
    print(f"{lvl.value:9s} fixed size: {ergm_summary(lvl, reference_size)}")
