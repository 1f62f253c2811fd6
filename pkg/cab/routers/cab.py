from cab.cascade import cab_select
from cab.routers import Router


class ConformalAlignment(Router):
    name = 'cab'

    def __init__(self):
        self.last_result = None

    def route(self, view, risk):
        te = list(zip(view.ids, view.predicted))
        self.last_result = cab_select(view.validation, te, risk, view.seed)
        return self.last_result.selected_ids
