# Field theory toolkit backend
