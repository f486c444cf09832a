"""Mirror descent with step sizes that need no Lipschitz constant."""
