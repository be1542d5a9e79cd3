"""Pure computation: modular data, the torus model, theta sections and the connections."""
