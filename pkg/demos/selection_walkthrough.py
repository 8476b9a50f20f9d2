"""
Category-coverage selection, step by step
=========================================

Eight hand-built clients, three selection rules, and the trace that shows
why they pick what they pick.  No training involved; selection only needs
the category masks.
"""

from catfed import Mode, SelectionConfig, build_mask, select_cost, select_performance
from catfed.selection import trace_selection

# Six categories.  Client 0 is a generalist, clients 5-7 are one-category
# specialists, and category 5 lives only on clients 0 and 7.
holdings = [
    [0, 1, 2, 3, 5],
    [0, 1, 2],
    [1, 2, 4],
    [0, 3],
    [2, 4],
    [3],
    [4],
    [5],
]
masks = [build_mask(cats, 6) for cats in holdings]

config = SelectionConfig(num_categories=6, mode=Mode.B)

# The performance rule walks categories in ascending order and grabs the
# highest-ranked client holding each one, so popular clients are reused
# for nothing and every category gets a dedicated update.
perf = select_performance(masks, config)
print("performance picks: ", perf.selected)
print("covered:", perf.covered_count(), "of 6, skipped:", perf.skipped_categories)
print()

# The cost rule scans clients ranked by how many categories they hold and
# keeps one only if it adds a category nobody selected so far has.  Same
# coverage, fewer uploads.
cost = select_cost(masks, config)
print("cost picks:        ", cost.selected)
print("covered:", cost.covered_count(), "of 6")
print()

# The full trace shows the ranked order and the running coverage; handy
# when a selection looks surprising.
for line in trace_selection(masks, config, "cat_cost"):
    print(line)
print()

# Capping the budget at two clients (explicit limit) stops either rule
# early; coverage drops accordingly.
tight = SelectionConfig(num_categories=6, limit=2)
print("limit=2 performance covers", select_performance(masks, tight).covered_count())
print("limit=2 cost covers       ", select_cost(masks, tight).covered_count())
