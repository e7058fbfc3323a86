# %% [markdown]
# # Account levels, densities and backbones
#
# This walkthrough builds the synthetic four-level fixture, splits the
# retweet network by account level and compares the levels on
# within-organization density. It then extracts significance backbones and
# collapses them to organization graphs.

# %%
from collections import Counter

from stratanet.backbone import extract_backbone
from stratanet.ingest import FilterSpec, build_account_graph, build_level_graphs, collapse, filter_events
from stratanet.metrics import mixing_matrix, org_density
from stratanet.model import DegenerateAnalysisError, Level
from stratanet.synthetic import four_level_fixture
from stratanet.temporal import account_burstiness

data = four_level_fixture(seed=0)
print(len(data.events), "events;", len(data.roster.organizations), "organizations")
print(Counter(e.kind.value for e in data.events))

# %% [markdown]
# Only events whose text mentions a topic keyword are kept. Each level graph
# keeps the retweets whose two endpoints both belong to that level.

# %%
events = filter_events(data.events, FilterSpec(keywords=tuple(data.keywords)), data.roster)
graphs = build_level_graphs(events, data.roster)
for lvl, g in graphs.items():
    print(f"{lvl.value:9s} vertices={g.n_vertices:4d} edges={g.n_edges:5d} W={g.total_weight}")

# %% [markdown]
# ## Mixing between levels
# Each cell is the share of ordered account pairs, grouped by level, that
# carry at least one retweet.

# %%
mm = mixing_matrix(build_account_graph(events, data.roster), data.roster)
print(mm.probabilities.round(4))

# %% [markdown]
# ## Within-organization density
# The organization main level has a single account per organization, so the
# density there is undefined and reported as such.

# %%
for lvl in Level:
    try:
        print(lvl.value, round(org_density(graphs[lvl], data.roster, lvl).mean, 3))
    except DegenerateAnalysisError as exc:
        print(lvl.value, "->", exc)

# %% [markdown]
# ## Burstiness
# Burstiness is computed from all event kinds, after the keyword filter.

# %%
records = account_burstiness(events)
by_level = {}
for r in records:
    by_level.setdefault(data.roster[r.account_id].level.value, []).append(r.B)
for lvl, vals in by_level.items():
    print(lvl, len(vals), "accounts, mean B =", round(sum(vals) / len(vals), 3))

# %% [markdown]
# ## Backbones and collapsed graphs
# An edge survives when its weight is improbably high given the strengths
# of its endpoints (binomial upper tail, alpha = 0.1).

# %%
for lvl, g in graphs.items():
    bb = extract_backbone(g, 0.1)
    cg = collapse(bb, data.roster)
    print(f"{lvl.value:9s} backbone edges={bb.n_edges:5d} collapsed edges={cg.n_edges:4d}")
