from .tree_handler import TableTree, EditCosts, tree_edit_distance, teds, \
    teds_s
