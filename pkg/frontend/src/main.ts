import { ServiceClient } from "./api.js";
import { createApp } from "./app.js";

const mount = document.getElementById("app");
if (!mount) throw new Error("missing #app mount point");
createApp(mount, new ServiceClient());
